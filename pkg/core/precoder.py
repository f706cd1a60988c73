"""
Построение пар прекодеров, максимизирующих суммарные секретные степени свободы
(S.D.o.F.) полнодуплексного MIMO канала с перехватчиком.

Кандидатные пары векторов делятся на восемь подмножеств S11..S24:
S1x зануляют сигнал на Eve, S2x выравнивают сигналы Alice и Bob на Eve
(G_a v_a = G_b v_b). Внутри групп подмножества различаются тем, занулена ли
самоинтерференция у передающего узла.
"""
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from core.channel_model import ChannelSet, NetworkConfig
from core.errors import BudgetExceeded, InternalInconsistency, RankDegenerate
from core.linalg import as_cmatrix, dim_diff, gsvd, null_basis, numeric_rank, row_basis, svd
from core.logger import setup_logger

logger = setup_logger("Precoder")

# Относительный порог рангов для произведений канал x прекодер
EVAL_RTOL = 1e-9


class SubsetId(str, Enum):
    """Подмножество кандидатных пар векторов"""
    S11 = "S11"
    S12 = "S12"
    S13 = "S13"
    S14 = "S14"
    S21 = "S21"
    S22 = "S22"
    S23 = "S23"
    S24 = "S24"


ALIGNED = (SubsetId.S21, SubsetId.S22, SubsetId.S23, SubsetId.S24)

# Зеркальное соответствие при перестановке ролей Alice и Bob
MIRROR = {
    SubsetId.S11: SubsetId.S13, SubsetId.S13: SubsetId.S11,
    SubsetId.S12: SubsetId.S14, SubsetId.S14: SubsetId.S12,
    SubsetId.S21: SubsetId.S21, SubsetId.S24: SubsetId.S24,
    SubsetId.S22: SubsetId.S23, SubsetId.S23: SubsetId.S22,
}

# Расход приёмных измерений (Alice, Bob) одной пары подмножества
COST = {
    SubsetId.S11: (0, 1),
    SubsetId.S12: (1, 1),
    SubsetId.S13: (1, 0),
    SubsetId.S14: (1, 1),
    SubsetId.S21: (1, 1),
    SubsetId.S22: (2, 1),
    SubsetId.S23: (1, 2),
    SubsetId.S24: (2, 2),
}


class Case(str, Enum):
    """Случай выбора числа пар в зависимости от соотношения антенн"""
    A_I_A = "A_i_a"
    A_I_B = "A_i_b"
    A_II_A = "A_ii_a"
    A_II_B = "A_ii_b"
    B = "B"
    C = "C"
    D = "D"


@dataclass(frozen=True)
class SDoFPair:
    """Пара S.D.o.F. (Alice -> Bob, Bob -> Alice)"""
    ds_a: int
    ds_b: int

    @property
    def total(self) -> int:
        return self.ds_a + self.ds_b

    def as_tuple(self) -> Tuple[int, int]:
        return (self.ds_a, self.ds_b)


@dataclass(frozen=True)
class SubsetBudget:
    """Максимальное число линейно независимых пар по подмножествам"""
    d: Dict[SubsetId, int]
    s_hat: int
    s_bar: int
    s_breve: int
    s_tilde: int

    def __getitem__(self, subset: SubsetId) -> int:
        return self.d[SubsetId(subset)]

    def as_dict(self) -> Dict[str, int]:
        return {sid.value: self.d[sid] for sid in SubsetId}


@dataclass(frozen=True)
class SelectionCounts:
    """
    Выбранные числа пар для активного случая.

    counts - числа q1..q7, zeta1..zeta6, eta1..eta6 или t1..t5;
    schedule - подмножества в порядке ранжирования, по одной записи на пару.
    """
    case: Case
    counts: Tuple[int, ...]
    labels: Tuple[str, ...]
    schedule: Tuple[SubsetId, ...]

    def per_subset(self) -> Dict[SubsetId, int]:
        tally = Counter(self.schedule)
        return {sid: tally.get(sid, 0) for sid in SubsetId}

    def as_dict(self) -> Dict[str, int]:
        return dict(zip(self.labels, self.counts))


def _load_columns(v: np.ndarray, power: float) -> np.ndarray:
    """Равное распределение мощности между ненулевыми столбцами"""
    v = as_cmatrix(v).copy()
    if v.shape[1] == 0:
        return v
    norms = np.linalg.norm(v, axis=0)
    active = norms > 0
    n_active = int(np.count_nonzero(active))
    if n_active:
        v[:, active] *= np.sqrt(power / n_active) / norms[active]
    return v


@dataclass(frozen=True, eq=False)
class PrecoderPair:
    """Матрицы прекодеров Alice и Bob с происхождением столбцов"""
    v_a: np.ndarray
    v_b: np.ndarray
    provenance: Tuple[SubsetId, ...] = ()
    power: float = 0.0

    @classmethod
    def loaded(cls, v_a, v_b, power: float, provenance: Sequence[SubsetId] = ()) -> "PrecoderPair":
        """Пара с нормировкой мощности на каждой стороне"""
        v_a = as_cmatrix(v_a)
        v_b = as_cmatrix(v_b)
        if v_a.shape[1] != v_b.shape[1]:
            raise InternalInconsistency(
                f"Число столбцов V_a ({v_a.shape[1]}) и V_b ({v_b.shape[1]}) различно"
            )
        return cls(_load_columns(v_a, power), _load_columns(v_b, power), tuple(provenance), float(power))

    @classmethod
    def empty(cls, na_t: int, nb_t: int, power: float = 0.0) -> "PrecoderPair":
        return cls(np.zeros((na_t, 0), dtype=complex), np.zeros((nb_t, 0), dtype=complex), (), float(power))

    @property
    def columns(self) -> int:
        return self.v_a.shape[1]

    def rescaled(self, power: float) -> "PrecoderPair":
        """Та же пара направлений с бюджетом мощности power"""
        return PrecoderPair.loaded(self.v_a, self.v_b, power, self.provenance)

    def swapped(self) -> "PrecoderPair":
        return PrecoderPair(self.v_b, self.v_a, tuple(MIRROR[p] for p in self.provenance), self.power)

    def with_columns(self, va, vb, subset: SubsetId) -> "PrecoderPair":
        """Пара с добавленным столбцом (без перенормировки)"""
        return PrecoderPair(
            np.hstack([self.v_a, as_cmatrix(va)]),
            np.hstack([self.v_b, as_cmatrix(vb)]),
            self.provenance + (subset,),
            self.power,
        )


def _eval_tol(*factors: Tuple[np.ndarray, np.ndarray]) -> float:
    """Порог ранга для произведений H @ V: EVAL_RTOL * max ||H|| ||V||"""
    scale = 0.0
    for h, v in factors:
        if h.size and v.size:
            scale = max(scale, np.linalg.norm(h, 2) * np.linalg.norm(v, 2))
    return EVAL_RTOL * scale


def _rank_of(h: np.ndarray, v: np.ndarray) -> int:
    return numeric_rank(h @ v, _eval_tol((h, v)))


def _dim_diff_products(h1, v1, h2, v2) -> int:
    return dim_diff(h1 @ v1, h2 @ v2, _eval_tol((h1, v1), (h2, v2)))


def config_of(channels: ChannelSet, rho: float = 1.0) -> NetworkConfig:
    """Разбиение антенн, восстановленное по размерам каналов"""
    return NetworkConfig(
        na_t=channels.g_a.shape[1], na_r=channels.h_aa.shape[0],
        nb_t=channels.g_b.shape[1], nb_r=channels.h_bb.shape[0],
        ne=channels.g_a.shape[0], rho=rho,
    )


def _orth_columns(m: np.ndarray, dim: int) -> np.ndarray:
    """Ортонормированный базис ведущих dim направлений span(m)"""
    if dim <= 0 or m.shape[1] == 0:
        return np.zeros((m.shape[0], 0), dtype=complex)
    u, _, _ = svd(m)
    return u[:, :dim]


class SubsetSpaces:
    """
    Геометрия подмножеств для одной реализации каналов: базисы ядер,
    четыре GSVD выравнивающих подмножеств и бюджеты.
    """

    _TRANSFORMS = {
        SubsetId.S21: (True, True),
        SubsetId.S22: (False, True),
        SubsetId.S23: (True, False),
        SubsetId.S24: (False, False),
    }

    def __init__(self, channels: ChannelSet, h_blind: bool = False):
        self.channels = channels
        self.h_blind = h_blind
        self.config = config_of(channels)
        self._check_ranks()
        self.gamma_aa = null_basis(channels.h_aa)
        self.gamma_bb = null_basis(channels.h_bb)
        self._gsvd = {}
        for sid in ALIGNED:
            self._gsvd[sid] = gsvd(*self._gsvd_inputs(sid)[:2])
        self.budget = self._budget()

    def _check_ranks(self):
        for name in ("h_ba", "h_ab", "h_aa", "h_bb", "g_a", "g_b"):
            mat = self.channels.link(name)
            if numeric_rank(mat) != min(mat.shape):
                raise RankDegenerate(f"Канал {name} {mat.shape} не полного ранга")

    def _gsvd_inputs(self, sid: SubsetId):
        use_aa, use_bb = self._TRANSFORMS[sid]
        ch = self.channels
        ta = self.gamma_aa if use_aa else np.eye(ch.g_a.shape[1], dtype=complex)
        tb = self.gamma_bb if use_bb else np.eye(ch.g_b.shape[1], dtype=complex)
        return ch.g_a @ ta, ch.g_b @ tb, ta, tb

    def _budget(self) -> SubsetBudget:
        cfg = self.config
        s_hat, s_bar, s_breve, s_tilde = (self._gsvd[sid].s for sid in ALIGNED)
        d = {
            SubsetId.S11: max(cfg.na_t - cfg.ne - cfg.na_r, 0),
            SubsetId.S12: min(cfg.na_r, max(cfg.na_t - cfg.ne, 0)),
            SubsetId.S13: max(cfg.nb_t - cfg.ne - cfg.nb_r, 0),
            SubsetId.S14: min(cfg.nb_r, max(cfg.nb_t - cfg.ne, 0)),
        }
        if self.h_blind:
            d[SubsetId.S11] = d[SubsetId.S13] = 0
            d[SubsetId.S21] = d[SubsetId.S22] = d[SubsetId.S23] = 0
            d[SubsetId.S24] = s_tilde
        else:
            d[SubsetId.S21] = s_hat
            d[SubsetId.S22] = max(s_bar - s_hat, 0)
            d[SubsetId.S23] = max(s_breve - s_hat, 0)
            d[SubsetId.S24] = max(s_tilde - s_bar - s_breve + s_hat, 0)
        return SubsetBudget(d=d, s_hat=s_hat, s_bar=s_bar, s_breve=s_breve, s_tilde=s_tilde)

    def _eve_null_basis(self, side: str) -> Tuple[np.ndarray, np.ndarray]:
        """Базисы S_1x: (ядро H_ii внутри ядра G_i, дополнение) в координатах антенн"""
        g = self.channels.g_a if side == "a" else self.channels.g_b
        h = self.channels.h_aa if side == "a" else self.channels.h_bb
        gamma_g = null_basis(g)
        if self.h_blind:
            return np.zeros((g.shape[1], 0), dtype=complex), gamma_g
        inner = h @ gamma_g
        return gamma_g @ null_basis(inner), gamma_g @ row_basis(inner)

    def _exclusion(self, sid: SubsetId) -> np.ndarray:
        """Базис пересечений более высокого приоритета на стороне Eve"""
        ne = self.channels.g_a.shape[0]
        if self.h_blind or sid == SubsetId.S21:
            return np.zeros((ne, 0), dtype=complex)
        if sid in (SubsetId.S22, SubsetId.S23):
            return _orth_columns(self._gsvd[SubsetId.S21].x2, self.budget.s_hat)
        stacked = np.hstack([self._gsvd[SubsetId.S22].x2, self._gsvd[SubsetId.S23].x2])
        dim = self.budget.s_bar + self.budget.s_breve - self.budget.s_hat
        return _orth_columns(stacked, dim)

    def vectors(self, sid: SubsetId, count: int,
                rng: Optional[np.random.Generator] = None) -> Tuple[np.ndarray, np.ndarray]:
        """count линейно независимых пар (столбцы v_a, столбцы v_b) из подмножества sid"""
        sid = SubsetId(sid)
        budget = self.budget[sid]
        if count < 0 or count > budget:
            raise BudgetExceeded(f"{sid.value}: запрошено {count}, бюджет {budget}")
        na_t = self.channels.g_a.shape[1]
        nb_t = self.channels.g_b.shape[1]
        if count == 0:
            return np.zeros((na_t, 0), dtype=complex), np.zeros((nb_t, 0), dtype=complex)

        if sid in (SubsetId.S11, SubsetId.S12):
            basis = self._eve_null_basis("a")[0 if sid == SubsetId.S11 else 1]
            return _pick(basis, count, rng), np.zeros((nb_t, count), dtype=complex)
        if sid in (SubsetId.S13, SubsetId.S14):
            basis = self._eve_null_basis("b")[0 if sid == SubsetId.S13 else 1]
            return np.zeros((na_t, count), dtype=complex), _pick(basis, count, rng)

        res = self._gsvd[sid]
        _, _, ta, tb = self._gsvd_inputs(sid)
        x2 = res.x2
        q = self._exclusion(sid)
        projected = x2 - q @ (q.conj().T @ x2) if q.shape[1] else x2
        _, _, right = svd(projected)
        # Направления пересечения, максимально ортогональные исключённым
        z = _pick(right[:, :budget], count, rng)
        coeff_a = np.diag(1.0 / np.diag(res.lambda1))
        coeff_b = np.diag(1.0 / np.diag(res.lambda2))
        v_a = ta @ res.psi12 @ coeff_a @ z
        v_b = tb @ res.psi22 @ coeff_b @ z
        return v_a, v_b


def _pick(basis: np.ndarray, count: int, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Первые count столбцов базиса либо случайные комбинации при заданном rng"""
    if rng is None:
        return basis[:, :count]
    dim = basis.shape[1]
    mix = rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))
    q, _ = sla.qr(mix, mode="economic")
    return basis @ q


def subset_budgets(channels: ChannelSet, h_blind: bool = False) -> SubsetBudget:
    """
    Бюджеты d_ij для реализации каналов

    Raises:
        RankDegenerate: если какой-либо канал не полного ранга
    """
    return SubsetSpaces(channels, h_blind).budget


def subset_vectors(channels: ChannelSet, subset: SubsetId, count: int, seed=None,
                   h_blind: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    count пар векторов подмножества; без seed берутся ведущие направления,
    с seed - случайные комбинации внутри допустимого подпространства.
    """
    rng = None if seed is None else np.random.default_rng(seed)
    return SubsetSpaces(channels, h_blind).vectors(subset, count, rng)


# --- Ранжирование и числа выбираемых пар ---

@dataclass(frozen=True)
class _Stage:
    label: str
    subsets: Tuple[SubsetId, ...]
    cap: int
    cost: Tuple[int, int]
    mode: str = "max"
    # Ступень, единицы которой уже израсходовали часть бюджета этой
    shared_with: Optional[str] = None

    def mirrored(self) -> "_Stage":
        return _Stage(self.label, tuple(MIRROR[s] for s in self.subsets), self.cap,
                      (self.cost[1], self.cost[0]), self.mode, self.shared_with)


def _stage(label, subset: SubsetId, cap: int, mode: str = "max",
           shared_with: Optional[str] = None) -> _Stage:
    return _Stage(label, (subset,), max(cap, 0), COST[subset], mode, shared_with)


def _round_stage(label, first: SubsetId, second: SubsetId, cap: int) -> _Stage:
    cost = tuple(a + b for a, b in zip(COST[first], COST[second]))
    return _Stage(label, (first, second), max(cap, 0), cost)


def _case_a_stages(d: Dict[SubsetId, int], na_r: int, nb_r: int) -> Tuple[List[_Stage], str]:
    """Ступени случая A при nb_r >= na_r; второй элемент - подслучай 'a' или 'b'"""
    split = min(d[SubsetId.S23], max(nb_r - na_r, 0))
    d23_rest = d[SubsetId.S23] - split
    d22 = d[SubsetId.S22]
    stages = [
        _stage("q1", SubsetId.S21, d[SubsetId.S21]),
        _stage("q2", SubsetId.S23, split),
    ]
    if d22 >= d23_rest:
        stages.append(_round_stage("q3", SubsetId.S22, SubsetId.S23, d23_rest))
        stages.append(_stage("q4", SubsetId.S22, d22, shared_with="q3"))
        sub = "a"
    else:
        stages.append(_round_stage("q3", SubsetId.S22, SubsetId.S23, d22))
        stages.append(_stage("q4", SubsetId.S23, d23_rest, shared_with="q3"))
        sub = "b"
    stages += [
        _stage("q5", SubsetId.S24, d[SubsetId.S24]),
        _stage("q6", SubsetId.S12, d[SubsetId.S12], "min"),
        _stage("q7", SubsetId.S14, d[SubsetId.S14], "min"),
    ]
    return stages, sub


def case_of(config: NetworkConfig) -> str:
    """Буква случая: A, B, C или D"""
    a_surplus = config.na_t > config.ne + config.na_r
    b_surplus = config.nb_t > config.ne + config.nb_r
    if not a_surplus and not b_surplus:
        return "A"
    if b_surplus and not a_surplus:
        return "B"
    if a_surplus and not b_surplus:
        return "C"
    return "D"


def _stages_for(budget: SubsetBudget, config: NetworkConfig) -> Tuple[Case, List[_Stage]]:
    d = budget.d
    letter = case_of(config)
    if letter == "A":
        if config.nb_r >= config.na_r:
            stages, sub = _case_a_stages(d, config.na_r, config.nb_r)
            return Case(f"A_i_{sub}"), stages
        mirrored = {sid: d[MIRROR[sid]] for sid in SubsetId}
        stages, sub = _case_a_stages(mirrored, config.nb_r, config.na_r)
        return Case(f"A_ii_{sub}"), [st.mirrored() for st in stages]

    if letter == "B":
        first = min(d[SubsetId.S22], config.nb_r)
        return Case.B, [
            _stage("zeta1", SubsetId.S21, d[SubsetId.S21]),
            _stage("zeta2", SubsetId.S22, first),
            _stage("zeta3", SubsetId.S13, d[SubsetId.S13]),
            _stage("zeta4", SubsetId.S22, d[SubsetId.S22] - first),
            _stage("zeta5", SubsetId.S12, d[SubsetId.S12], "min"),
            _stage("zeta6", SubsetId.S14, d[SubsetId.S14], "min"),
        ]
    if letter == "C":
        first = min(d[SubsetId.S23], config.na_r)
        return Case.C, [
            _stage("eta1", SubsetId.S21, d[SubsetId.S21]),
            _stage("eta2", SubsetId.S23, first),
            _stage("eta3", SubsetId.S11, d[SubsetId.S11]),
            _stage("eta4", SubsetId.S23, d[SubsetId.S23] - first),
            _stage("eta5", SubsetId.S12, d[SubsetId.S12], "min"),
            _stage("eta6", SubsetId.S14, d[SubsetId.S14], "min"),
        ]
    # S12 раньше S14: ранги равны, порядок фиксирован
    return Case.D, [
        _stage("t1", SubsetId.S21, d[SubsetId.S21]),
        _stage("t2", SubsetId.S11, d[SubsetId.S11]),
        _stage("t3", SubsetId.S13, d[SubsetId.S13]),
        _stage("t4", SubsetId.S12, d[SubsetId.S12], "min"),
        _stage("t5", SubsetId.S14, d[SubsetId.S14], "min"),
    ]


def _units(stage: _Stage, residual: List[int], cap: int) -> int:
    """min+{ max|min по приёмникам floor(остаток / расход), бюджет }"""
    terms = [residual[i] // stage.cost[i] for i in (0, 1) if stage.cost[i] > 0]
    value = max(terms) if stage.mode == "max" else min(terms)
    return max(min(value, cap), 0)


def selection_counts(budget: SubsetBudget, config: NetworkConfig) -> SelectionCounts:
    """Числа пар по ступеням ранжирования активного случая"""
    case, stages = _stages_for(budget, config)
    residual = [config.na_r, config.nb_r]
    counts, labels, schedule = [], [], []
    taken: Dict[str, int] = {}
    for stage in stages:
        cap = stage.cap - taken.get(stage.shared_with, 0)
        units = _units(stage, residual, cap)
        taken[stage.label] = units
        residual[0] -= units * stage.cost[0]
        residual[1] -= units * stage.cost[1]
        for _ in range(units):
            schedule.extend(stage.subsets)
        counts.append(units * len(stage.subsets))
        labels.append(stage.label)
    logger.debug(f"Случай {case.value}: {dict(zip(labels, counts))}")
    return SelectionCounts(case, tuple(counts), tuple(labels), tuple(schedule))


def _generic_sdof(per_subset: Dict[SubsetId, int], config: NetworkConfig) -> SDoFPair:
    c = per_subset
    aligned = sum(c[sid] for sid in ALIGNED)
    streams_a = c[SubsetId.S11] + c[SubsetId.S12] + aligned
    streams_b = c[SubsetId.S13] + c[SubsetId.S14] + aligned
    si_a = c[SubsetId.S12] + c[SubsetId.S22] + c[SubsetId.S24]
    si_b = c[SubsetId.S14] + c[SubsetId.S23] + c[SubsetId.S24]
    ds_a = min(max(config.nb_r - si_b, 0), streams_a)
    ds_b = min(max(config.na_r - si_a, 0), streams_b)
    return SDoFPair(ds_a, ds_b)


def sum_sdof_closed_form(budget: SubsetBudget, config: NetworkConfig) -> Tuple[SDoFPair, int]:
    """S.D.o.F. пары и их сумма по числам выбранных пар"""
    counts = selection_counts(budget, config)
    pair = _generic_sdof(counts.per_subset(), config)
    return pair, pair.total


# --- Оценка достигнутых S.D.o.F. ---

def achieved_sdof(channels: ChannelSet, pair: PrecoderPair) -> SDoFPair:
    """
    S.D.o.F. выровненной пары: размерность полезного сигнала вне подпространства
    собственной интерференции приёмника, с перекрёстной проверкой по рангам.
    """
    ch = channels
    va, vb = pair.v_a, pair.v_b
    ds_a = _dim_diff_products(ch.h_ba, va, ch.h_bb, vb)
    ds_b = _dim_diff_products(ch.h_ab, vb, ch.h_aa, va)

    nb_r, na_r = ch.h_bb.shape[0], ch.h_aa.shape[0]
    check_a = min(max(nb_r - _rank_of(ch.h_bb, vb), 0), _rank_of(ch.h_ba, va))
    check_b = min(max(na_r - _rank_of(ch.h_aa, va), 0), _rank_of(ch.h_ab, vb))
    if (ds_a, ds_b) != (check_a, check_b):
        raise InternalInconsistency(
            f"S.D.o.F. по разности размерностей ({ds_a}, {ds_b}) "
            f"не совпадает с ранговой формой ({check_a}, {check_b})"
        )
    return SDoFPair(ds_a, ds_b)


def lemma1_sdof(channels: ChannelSet, pair: PrecoderPair) -> SDoFPair:
    """Знаковые S.D.o.F. произвольной пары: (m1 - n1, m2 - n2)"""
    ch = channels
    va, vb = pair.v_a, pair.v_b
    m1 = _dim_diff_products(ch.h_ba, va, ch.h_bb, vb)
    n1 = _dim_diff_products(ch.g_a, va, ch.g_b, vb)
    m2 = _dim_diff_products(ch.h_ab, vb, ch.h_aa, va)
    n2 = _dim_diff_products(ch.g_b, vb, ch.g_a, va)
    return SDoFPair(m1 - n1, m2 - n2)


def receive_constraints_ok(channels: ChannelSet, pair: PrecoderPair) -> bool:
    """Суммарная размерность сигнала и интерференции не превышает числа приёмных антенн"""
    ch = channels
    at_alice = _rank_of(ch.h_aa, pair.v_a) + _rank_of(ch.h_ab, pair.v_b)
    at_bob = _rank_of(ch.h_ba, pair.v_a) + _rank_of(ch.h_bb, pair.v_b)
    return at_alice <= ch.h_aa.shape[0] and at_bob <= ch.h_bb.shape[0]


def alignment_residual(channels: ChannelSet, pair: PrecoderPair) -> float:
    """
    Наибольшее по столбцам расхождение нормированных образов G_a v_a и G_b v_b
    на Eve; столбцы, оба образа которых исчезают, дают 0.
    """
    worst = 0.0
    ea = channels.g_a @ pair.v_a
    eb = channels.g_b @ pair.v_b
    for j in range(pair.columns):
        na = np.linalg.norm(ea[:, j])
        nb = np.linalg.norm(eb[:, j])
        floor_a = EVAL_RTOL * np.linalg.norm(channels.g_a, 2) * np.linalg.norm(pair.v_a[:, j]) if channels.g_a.size else 0.0
        floor_b = EVAL_RTOL * np.linalg.norm(channels.g_b, 2) * np.linalg.norm(pair.v_b[:, j]) if channels.g_b.size else 0.0
        vanish_a = na <= floor_a
        vanish_b = nb <= floor_b
        if vanish_a and vanish_b:
            continue
        if vanish_a != vanish_b:
            return 1.0
        worst = max(worst, float(np.linalg.norm(ea[:, j] / na - eb[:, j] / nb)))
    return worst


# --- Конструктор ---

def construct_precoders(channels: ChannelSet, config: NetworkConfig, constrained: bool = False,
                        seed=None, h_blind: bool = False) -> PrecoderPair:
    """
    Построить пару прекодеров по ранжированному расписанию подмножеств.

    Args:
        channels: (оценённые) каналы
        config: конфигурация сети (мощность берётся из power_dbm)
        constrained: остановиться, как только очередная пара нарушит
            ограничение по числу приёмных антенн
        seed: зерно для случайных свободных параметров; None - детерминированный выбор
        h_blind: не использовать знание каналов самоинтерференции и H

    Raises:
        RankDegenerate: неудачная реализация каналов
        InternalInconsistency: сумма S.D.o.F. уменьшилась при добавлении пары
    """
    spaces = SubsetSpaces(channels, h_blind)
    counts = selection_counts(spaces.budget, config)
    per_subset = counts.per_subset()

    rng = None if seed is None else np.random.default_rng(seed)
    blocks = {sid: spaces.vectors(sid, per_subset[sid], rng) for sid in SubsetId}

    pair = PrecoderPair.empty(channels.g_a.shape[1], channels.g_b.shape[1], config.power_w)
    cursor = Counter()
    best = 0
    for sid in counts.schedule:
        j = cursor[sid]
        cursor[sid] += 1
        va, vb = blocks[sid]
        candidate = pair.with_columns(va[:, j:j + 1], vb[:, j:j + 1], sid)
        if constrained and not receive_constraints_ok(channels, candidate):
            logger.debug(f"Ограничение приёмных антенн: остановка перед {sid.value}")
            break
        total = achieved_sdof(channels, candidate).total
        if total < best:
            raise InternalInconsistency(
                f"Сумма S.D.o.F. уменьшилась с {best} до {total} на паре из {sid.value}"
            )
        best = total
        pair = candidate

    logger.debug(
        f"Построено {pair.columns} пар ({counts.case.value}), сумма S.D.o.F. {best}"
    )
    return PrecoderPair.loaded(pair.v_a, pair.v_b, config.power_w, pair.provenance)


# --- Проекция произвольной пары в множество выровненных ---

# Верхняя граница порога совпадения направлений образов на Eve
ANGLE_TOL_MAX = 1e-3


def _image_angle_tol(ea: np.ndarray, eb: np.ndarray, tol: float) -> Optional[float]:
    """
    Порог синуса угла, ниже которого направления образов G_a V_a и G_b V_b
    считаются общими: абсолютная погрешность tol, делённая на наименьшее
    значимое сингулярное число образов.
    """
    values = [sv for m in (ea, eb) if m.size for sv in sla.svdvals(m) if sv > tol]
    if not values:
        return None
    return min(tol / min(values), ANGLE_TOL_MAX)


def align_project(channels: ChannelSet, pair: PrecoderPair) -> PrecoderPair:
    """
    Привести произвольную пару к выровненной на Eve: исключить направления,
    видимые только от одного источника, и уравнять образы общего подпространства.
    Знаковые S.D.o.F. при этом не уменьшаются.
    """
    ch = channels
    va, vb = pair.v_a, pair.v_b
    ea = ch.g_a @ va
    eb = ch.g_b @ vb
    tol = _eval_tol((ch.g_a, va), (ch.g_b, vb))
    res = gsvd(eb, ea, tol=tol, intersection_tol=_image_angle_tol(ea, eb, tol))

    # Общая часть: G_a V_a psi22 и G_b V_b psi12 порождают одно подпространство
    common_b = vb @ res.psi12
    common_a = va @ res.psi22
    if res.s:
        mix, *_ = sla.lstsq(ch.g_a @ common_a, ch.g_b @ common_b)
        common_a = common_a @ mix

    silent_a = va @ res.psi23
    silent_b = vb @ res.psi11
    na_t, nb_t = va.shape[0], vb.shape[0]
    new_a = np.hstack([
        common_a, silent_a, np.zeros((na_t, silent_b.shape[1]), dtype=complex),
    ])
    new_b = np.hstack([
        common_b, np.zeros((nb_t, silent_a.shape[1]), dtype=complex), silent_b,
    ])
    return PrecoderPair.loaded(new_a, new_b, pair.power)
