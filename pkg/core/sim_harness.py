"""
Монте-Карло эксперименты: развёртки по положению Eve, rho и неточности CSI,
таблицы S.D.o.F. для наборов конфигураций
"""
import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from core.baselines import mf_precoders, oneway_config, oneway_silent_bob, zf_precoders
from core.channel_model import (
    ChannelSet, Geometry, NetworkConfig, gen_pathloss, gen_rayleigh, perturb_csi,
)
from core.errors import ConfigError, RankDegenerate
from core.logger import setup_logger
from core.precoder import (
    PrecoderPair, SDoFPair, SubsetSpaces, achieved_sdof, alignment_residual,
    construct_precoders, receive_constraints_ok, selection_counts, sum_sdof_closed_form,
)
from core.rates import rates

logger = setup_logger("SimHarness")

SCHEMES = ("proposed", "proposed-constrained", "proposed-hblind", "mf", "zf", "oneway")
AXES = ("x", "y", "alpha", "rho", "none")
ALPHA_TARGETS = ("g", "h", "all")
CSV_FIELDS = [
    "scheme", "axis", "value", "rho", "alpha",
    "mean_rs_a", "mean_rs_b", "mean_rs_sum", "runs", "seed",
]
MAX_REDRAWS = 10

REFERENCE_CONFIGS = {
    "example-1": NetworkConfig(5, 2, 4, 3, 5),
    "example-2": NetworkConfig(4, 6, 8, 2, 5),
    "example-3": NetworkConfig(7, 4, 7, 4, 2),
    "default": NetworkConfig(3, 2, 3, 2, 5),
    "oneway": NetworkConfig(5, 0, 1, 4, 5),
    "constrained": NetworkConfig(4, 3, 5, 2, 5),
    "csi": NetworkConfig(4, 3, 4, 3, 4),
}


@dataclass(frozen=True)
class ExperimentSpec:
    """Описание развёртки Монте-Карло"""
    config: NetworkConfig = field(default_factory=lambda: NetworkConfig(3, 2, 3, 2, 5))
    geometry: Geometry = field(default_factory=Geometry.default)
    axis: str = "none"
    start: float = 0.0
    stop: float = 0.0
    step: float = 1.0
    values: Optional[Tuple[float, ...]] = None
    runs: int = 500
    schemes: Tuple[str, ...] = ("proposed", "mf", "zf")
    seed: int = 2017
    csi_alpha: Dict[str, float] = field(default_factory=lambda: {"g": 0.0, "h": 0.0})
    alpha_target: str = "g"

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"axis: неизвестная ось '{self.axis}', допустимы {AXES}")
        if not isinstance(self.runs, int) or self.runs < 1:
            raise ConfigError(f"runs: ожидается целое >= 1, получено {self.runs!r}")
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown or not self.schemes:
            raise ConfigError(f"schemes: неизвестные схемы {unknown}, допустимы {SCHEMES}")
        if self.alpha_target not in ALPHA_TARGETS:
            raise ConfigError(f"alpha_target: '{self.alpha_target}', допустимы {ALPHA_TARGETS}")
        for group in ("g", "h"):
            alpha = self.csi_alpha.get(group, 0.0)
            if not 0.0 <= alpha <= 1.0:
                raise ConfigError(f"csi_alpha.{group}: значение {alpha} вне [0, 1]")
        if self.values is None and self.axis != "none":
            if self.step <= 0:
                raise ConfigError(f"step: ожидается > 0, получено {self.step}")
            if self.start > self.stop:
                raise ConfigError(f"start ({self.start}) больше stop ({self.stop})")
        if self.axis == "alpha":
            bad = [v for v in self.points() if not 0.0 <= v <= 1.0]
            if bad:
                raise ConfigError(f"Значения alpha вне [0, 1]: {bad}")
        if self.axis == "rho":
            bad = [v for v in self.points() if not 0.0 <= v <= 1.0]
            if bad:
                raise ConfigError(f"Значения rho вне [0, 1]: {bad}")

    def points(self) -> List[float]:
        """Значения оси развёртки"""
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.axis == "none":
            return [float(self.start)]
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 12) for k in range(count)]

    def at_point(self, value: float) -> Tuple[NetworkConfig, Geometry, Dict[str, float]]:
        """Конфигурация, геометрия и уровни неточности CSI в точке развёртки"""
        config, geometry = self.config, self.geometry
        alphas = {"g": float(self.csi_alpha.get("g", 0.0)), "h": float(self.csi_alpha.get("h", 0.0))}
        if self.axis == "x":
            geometry = geometry.with_eve((value, geometry.eve_pos[1]))
        elif self.axis == "y":
            geometry = geometry.with_eve((geometry.eve_pos[0], value))
        elif self.axis == "rho":
            config = replace(config, rho=value)
        elif self.axis == "alpha":
            groups = ("g", "h") if self.alpha_target == "all" else (self.alpha_target,)
            for group in groups:
                alphas[group] = value
        return config, geometry, alphas

    def as_dict(self) -> dict:
        doc = asdict(self)
        doc["schemes"] = list(self.schemes)
        return doc


@dataclass(frozen=True)
class SweepRow:
    """Средние секретные скорости одной схемы в одной точке развёртки"""
    scheme: str
    axis: str
    value: float
    rho: float
    alpha: float
    mean_rs_a: float
    mean_rs_b: float
    mean_rs_sum: float
    runs: int
    seed: int
    # Повторные реализации каналов в точке (в CSV не пишется); прогон i, попытка k: зерно (seed, i, k)
    redraws: int = 0

    def as_csv_row(self) -> Dict[str, str]:
        row = {}
        for name in CSV_FIELDS:
            value = getattr(self, name)
            row[name] = f"{value:.6g}" if isinstance(value, float) else str(value)
        return row


def run_seed_streams(seed: int, run: int, attempt: int = 0) -> List[np.random.SeedSequence]:
    """Независимые потоки (каналы, шум G, шум H, каналы one-way) прогона run"""
    return np.random.SeedSequence(seed, spawn_key=(run, attempt)).spawn(4)


def _estimate(true: ChannelSet, alphas: Dict[str, float], seed_g, seed_h) -> ChannelSet:
    estimated = perturb_csi(true, alphas["g"], "g", seed_g)
    return perturb_csi(estimated, alphas["h"], "h", seed_h)


def _scheme_pair(scheme: str, estimated: ChannelSet, config: NetworkConfig) -> PrecoderPair:
    power = config.power_w
    if scheme == "proposed":
        return construct_precoders(estimated, config)
    if scheme == "proposed-constrained":
        return construct_precoders(estimated, config, constrained=True)
    if scheme == "proposed-hblind":
        return construct_precoders(estimated, config, h_blind=True)
    if scheme == "mf":
        return mf_precoders(estimated, power).pair
    if scheme == "zf":
        return zf_precoders(estimated, power).pair
    raise ConfigError(f"Неизвестная схема '{scheme}'")


def _run_once(spec: ExperimentSpec, config: NetworkConfig, geometry: Geometry,
              alphas: Dict[str, float], run: int) -> Tuple[Dict[str, Tuple[float, float]], int]:
    """Секретные скорости всех схем одного прогона и номер удачной попытки"""
    for attempt in range(MAX_REDRAWS):
        s_channels, s_g, s_h, s_oneway = run_seed_streams(spec.seed, run, attempt)
        try:
            true = gen_pathloss(config, geometry, s_channels)
            estimated = _estimate(true, alphas, s_g, s_h)
            result = {}
            for scheme in spec.schemes:
                if scheme == "oneway":
                    result[scheme] = _oneway_rates(config, geometry, alphas, s_oneway, s_g, s_h)
                    continue
                point = rates(true, _scheme_pair(scheme, estimated, config), config.rho)
                result[scheme] = (point.rs_a, point.rs_b)
            return result, attempt
        except RankDegenerate as e:
            logger.warning(f"Прогон {run}, попытка {attempt}: {e}; новая реализация каналов")
    raise RankDegenerate(f"Прогон {run}: {MAX_REDRAWS} вырожденных реализаций подряд")


def _oneway_rates(config: NetworkConfig, geometry: Geometry, alphas: Dict[str, float],
                  s_channels, s_g, s_h) -> Tuple[float, float]:
    oneway = oneway_config(config)
    true = gen_pathloss(oneway, geometry, s_channels)
    estimated = _estimate(true, alphas, s_g, s_h)
    pair = construct_precoders(estimated, oneway)
    if oneway_silent_bob(config):
        pair = PrecoderPair(pair.v_a, np.zeros_like(pair.v_b), pair.provenance, pair.power)
    point = rates(true, pair, oneway.rho)
    return point.rs_a, point.rs_b


def run_sweep(spec: ExperimentSpec, workers: int = 1) -> List[SweepRow]:
    """
    Выполнить развёртку: строка на каждую точку и схему.

    Прогон с индексом i использует одни и те же зёрна во всех точках и схемах;
    результаты сводятся в порядке индексов, так что вывод не зависит от workers.
    """
    points = spec.points()
    logger.info(
        f"Развёртка {spec.axis}: {len(points)} точек, {spec.runs} прогонов, "
        f"схемы {list(spec.schemes)}, seed {spec.seed}"
    )
    started = time.monotonic()
    rows: List[SweepRow] = []
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        for value in points:
            config, geometry, alphas = spec.at_point(value)
            try:
                outcomes = list(executor.map(
                    lambda run: _run_once(spec, config, geometry, alphas, run),
                    range(spec.runs),
                ))
            except Exception as e:
                logger.error(f"Ошибка в точке {spec.axis}={value}: {e}", exc_info=True)
                raise
            redraws = sum(attempt for _, attempt in outcomes)
            if redraws:
                logger.info(f"Точка {spec.axis}={value}: повторных реализаций каналов {redraws}")
            alpha = alphas["g"] if spec.alpha_target == "all" else alphas[spec.alpha_target]
            for scheme in spec.schemes:
                rs = np.array([result[scheme] for result, _ in outcomes])
                mean_a = float(rs[:, 0].mean())
                mean_b = float(rs[:, 1].mean())
                rows.append(SweepRow(
                    scheme=scheme, axis=spec.axis, value=float(value),
                    rho=float(config.rho), alpha=float(alpha),
                    mean_rs_a=mean_a, mean_rs_b=mean_b, mean_rs_sum=mean_a + mean_b,
                    runs=spec.runs, seed=spec.seed, redraws=redraws,
                ))
            logger.debug(f"Точка {spec.axis}={value} готова")
    logger.info(f"Развёртка завершена за {time.monotonic() - started:.1f} с, строк: {len(rows)}")
    return rows


def write_csv(rows: Sequence[SweepRow], out: Union[str, Path, TextIO]) -> None:
    """Записать строки развёртки в CSV (путь или открытый поток)"""
    if isinstance(out, (str, Path)):
        with open(out, "w", newline="", encoding="utf-8") as f:
            write_csv(rows, f)
        return
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv_row())


def csv_text(rows: Sequence[SweepRow]) -> str:
    buffer = io.StringIO()
    write_csv(rows, buffer)
    return buffer.getvalue()


def summary_json(spec: ExperimentSpec, rows: Sequence[SweepRow], wall_time: float) -> dict:
    """Машиночитаемая сводка развёртки"""
    per_scheme = {}
    redraws = {f"{row.value:.6g}": row.redraws for row in rows}
    for scheme in spec.schemes:
        sums = [row.mean_rs_sum for row in rows if row.scheme == scheme]
        per_scheme[scheme] = float(np.mean(sums)) if sums else 0.0
    return {
        "spec": spec.as_dict(),
        "rows": len(rows),
        "wall_time_s": round(wall_time, 3),
        "mean_rs_sum_by_scheme": per_scheme,
        "redraws_by_value": redraws,
    }


@dataclass(frozen=True)
class SdofRow:
    """Строка таблицы S.D.o.F. для одной конфигурации"""
    label: str
    case: str
    budget: Dict[str, int]
    counts: Dict[str, int]
    closed: SDoFPair
    constructed: SDoFPair
    constrained: SDoFPair
    constraints_ok: bool
    alignment: float
    agree: bool

    @property
    def total(self) -> int:
        return self.closed.total


def _draw_generic(config: NetworkConfig, seed: int, index: int) -> SubsetSpaces:
    for attempt in range(MAX_REDRAWS):
        channels = gen_rayleigh(config, np.random.SeedSequence(seed, spawn_key=(index, attempt)))
        try:
            return SubsetSpaces(channels)
        except RankDegenerate as e:
            logger.warning(f"{config.label()}: {e}; новая реализация")
    raise RankDegenerate(f"{config.label()}: {MAX_REDRAWS} вырожденных реализаций подряд")


def sdof_table(configs: Sequence[NetworkConfig], seed: int = 2017,
               labels: Optional[Sequence[str]] = None) -> List[SdofRow]:
    """
    Случай, бюджеты, числа пар, S.D.o.F. по числам пар и по построенной паре
    (одна релеевская реализация на конфигурацию)
    """
    rows = []
    for index, config in enumerate(configs):
        label = labels[index] if labels else config.label()
        spaces = _draw_generic(config, seed, index)
        channels = spaces.channels
        counts = selection_counts(spaces.budget, config)
        closed, _ = sum_sdof_closed_form(spaces.budget, config)
        pair = construct_precoders(channels, config)
        constructed = achieved_sdof(channels, pair)
        limited = achieved_sdof(channels, construct_precoders(channels, config, constrained=True))
        row = SdofRow(
            label=label,
            case=counts.case.value,
            budget=spaces.budget.as_dict(),
            counts=counts.as_dict(),
            closed=closed,
            constructed=constructed,
            constrained=limited,
            constraints_ok=receive_constraints_ok(channels, pair),
            alignment=alignment_residual(channels, pair),
            agree=closed == constructed,
        )
        if row.agree:
            logger.info(f"{label}: случай {row.case}, S.D.o.F. {closed.as_tuple()}")
        else:
            logger.warning(
                f"{label}: расхождение S.D.o.F. {closed.as_tuple()} и {constructed.as_tuple()}"
            )
        rows.append(row)
    return rows
