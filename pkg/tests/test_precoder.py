"""
Юнит-тесты для бюджетов подмножеств, выбора числа пар и построения прекодеров
"""
import unittest
import sys
from pathlib import Path

import numpy as np

# Настройка путей для импорта
project_root = Path(__file__).parent.parent.absolute()
if str(project_root) not in sys.path:
    sys.path.insert(0, str(project_root))

from core.channel_model import ChannelSet, NetworkConfig, gen_rayleigh
from core.errors import BudgetExceeded, InternalInconsistency, RankDegenerate
from core.linalg import numeric_rank
from core.precoder import (
    Case, PrecoderPair, SubsetId, SubsetSpaces, achieved_sdof, align_project, alignment_residual,
    case_of, construct_precoders, lemma1_sdof, receive_constraints_ok, selection_counts,
    subset_budgets, subset_vectors, sum_sdof_closed_form,
)
from tests.test_runner import print_test_info

EXAMPLE_1 = NetworkConfig(5, 2, 4, 3, 5)
EXAMPLE_2 = NetworkConfig(4, 6, 8, 2, 5)
EXAMPLE_3 = NetworkConfig(7, 4, 7, 4, 2)
DEFAULT = NetworkConfig(3, 2, 3, 2, 5)
ONEWAY = NetworkConfig(5, 0, 1, 4, 5)
CONSTRAINED = NetworkConfig(4, 3, 5, 2, 5)
CSI = NetworkConfig(4, 3, 4, 3, 4)


def nonzero_budget(budget):
    return {name: value for name, value in budget.as_dict().items() if value}


def rel(x, ref):
    scale = max(np.linalg.norm(ref), 1e-300)
    return np.linalg.norm(x) / scale


class TestSubsetBudgets(unittest.TestCase):
    """Тесты для бюджетов d_ij"""

    def setUp(self):
        """Настройка перед каждым тестом"""
        self.seed = 2017

    def test_example_budgets(self):
        """Тест бюджетов трёх опорных примеров"""
        result = {
            "example-1": nonzero_budget(subset_budgets(gen_rayleigh(EXAMPLE_1, self.seed))),
            "example-2": nonzero_budget(subset_budgets(gen_rayleigh(EXAMPLE_2, self.seed))),
            "example-3": nonzero_budget(subset_budgets(gen_rayleigh(EXAMPLE_3, self.seed))),
        }
        expected = {
            "example-1": {"S22": 1, "S23": 2, "S24": 1},
            "example-2": {"S13": 1, "S14": 2, "S22": 4},
            "example-3": {"S11": 1, "S12": 4, "S13": 1, "S14": 4, "S21": 2},
        }
        print_test_info("Бюджеты примеров", {"seed": self.seed}, result, expected)

        self.assertEqual(result, expected)

    def test_scenario_budgets(self):
        """Тест бюджетов сценариев моделирования"""
        default = subset_budgets(gen_rayleigh(DEFAULT, self.seed))
        oneway = subset_budgets(gen_rayleigh(ONEWAY, self.seed))

        result = {
            "default": nonzero_budget(default),
            "default_dims": (default.s_hat, default.s_bar, default.s_breve, default.s_tilde),
            "oneway": nonzero_budget(oneway),
        }
        expected = {
            "default": {"S24": 1},
            "default_dims": (0, 0, 0, 1),
            "oneway": {"S23": 1},
        }
        print_test_info("Бюджеты сценариев", {"configs": [DEFAULT.label(), ONEWAY.label()]}, result, expected)

        self.assertEqual(result, expected)

    def test_h_blind_budgets(self):
        """Тест бюджетов без знания каналов самоинтерференции"""
        budget = subset_budgets(gen_rayleigh(EXAMPLE_3, self.seed), h_blind=True)

        result = nonzero_budget(budget)
        expected = {"S12": 4, "S14": 4, "S24": 2}
        print_test_info("H-blind бюджеты", {"config": EXAMPLE_3.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_rank_degenerate_channels(self):
        """Тест ошибки на вырожденной реализации каналов"""
        channels = gen_rayleigh(DEFAULT, self.seed)
        degenerate = channels.h_ba.copy()
        degenerate[1] = 2 * degenerate[0]
        broken = ChannelSet(
            h_ba=degenerate, h_ab=channels.h_ab, h_aa=channels.h_aa, h_bb=channels.h_bb,
            g_a=channels.g_a, g_b=channels.g_b,
        )
        with self.assertRaises(RankDegenerate):
            subset_budgets(broken)


class TestSubsetVectors(unittest.TestCase):
    """Тесты для векторов подмножеств"""

    def setUp(self):
        """Настройка перед каждым тестом"""
        self.seed = 11

    def test_s21_example_3(self):
        """Тест S21: зануление самоинтерференции и выравнивание на Eve"""
        ch = gen_rayleigh(EXAMPLE_3, self.seed)
        va, vb = subset_vectors(ch, SubsetId.S21, 2)
        ea, eb = ch.g_a @ va, ch.g_b @ vb

        result = {
            "columns": va.shape[1],
            "h_aa_null": rel(ch.h_aa @ va, va) <= 1e-10 * np.linalg.norm(ch.h_aa, 2),
            "h_bb_null": rel(ch.h_bb @ vb, vb) <= 1e-10 * np.linalg.norm(ch.h_bb, 2),
            "aligned": rel(ea - eb, ea) <= 1e-10,
            "eve_rank": numeric_rank(ea),
        }
        expected = {"columns": 2, "h_aa_null": True, "h_bb_null": True, "aligned": True, "eve_rank": 2}
        print_test_info("S21 на примере 3", {"config": EXAMPLE_3.label(), "count": 2}, result, expected)

        self.assertEqual(result, expected)

    def test_s22_example_1(self):
        """Тест S22: зануление только у Bob"""
        ch = gen_rayleigh(EXAMPLE_1, self.seed)
        va, vb = subset_vectors(ch, SubsetId.S22, 1)
        ea, eb = ch.g_a @ va, ch.g_b @ vb

        result = {
            "h_bb_null": rel(ch.h_bb @ vb, vb) <= 1e-10 * np.linalg.norm(ch.h_bb, 2),
            "h_aa_active": rel(ch.h_aa @ va, va) > 1e-6,
            "aligned": rel(ea - eb, ea) <= 1e-10,
            "nonzero": np.linalg.norm(ea) > 1e-8,
        }
        expected = {"h_bb_null": True, "h_aa_active": True, "aligned": True, "nonzero": True}
        print_test_info("S22 на примере 1", {"config": EXAMPLE_1.label(), "count": 1}, result, expected)

        self.assertEqual(result, expected)

    def test_eve_null_subsets(self):
        """Тест S11..S14: зануление на Eve и нулевой партнёр"""
        ch = gen_rayleigh(EXAMPLE_3, self.seed)
        checks = {}
        for sid, count in ((SubsetId.S11, 1), (SubsetId.S12, 4), (SubsetId.S13, 1), (SubsetId.S14, 4)):
            va, vb = subset_vectors(ch, sid, count, seed=3)
            own_v, own_g, own_h, partner = (
                (va, ch.g_a, ch.h_aa, vb) if sid in (SubsetId.S11, SubsetId.S12)
                else (vb, ch.g_b, ch.h_bb, va)
            )
            checks[sid.value] = {
                "rank": numeric_rank(own_v),
                "eve_null": rel(own_g @ own_v, own_v) <= 1e-10 * np.linalg.norm(own_g, 2),
                "partner_zero": not np.any(partner),
                "si_null": rel(own_h @ own_v, own_v) <= 1e-10 * np.linalg.norm(own_h, 2),
            }
        expected = {
            "S11": {"rank": 1, "eve_null": True, "partner_zero": True, "si_null": True},
            "S12": {"rank": 4, "eve_null": True, "partner_zero": True, "si_null": False},
            "S13": {"rank": 1, "eve_null": True, "partner_zero": True, "si_null": True},
            "S14": {"rank": 4, "eve_null": True, "partner_zero": True, "si_null": False},
        }
        print_test_info("S11..S14 на примере 3", {"config": EXAMPLE_3.label()}, checks, expected)

        self.assertEqual(checks, expected)

    def test_zero_count_and_budget_exceeded(self):
        """Тест пустого запроса и превышения бюджета"""
        ch = gen_rayleigh(EXAMPLE_1, self.seed)
        va, vb = subset_vectors(ch, SubsetId.S11, 0)

        print_test_info("Пустой запрос S11", {"config": EXAMPLE_1.label()}, (va.shape, vb.shape), ((5, 0), (4, 0)))

        self.assertEqual((va.shape, vb.shape), ((5, 0), (4, 0)))
        with self.assertRaises(BudgetExceeded):
            subset_vectors(ch, SubsetId.S22, 2)

    def test_aligned_images_independent(self):
        """Тест: образы на Eve всех выравнивающих подмножеств линейно независимы"""
        ch = gen_rayleigh(EXAMPLE_1, self.seed)
        spaces = SubsetSpaces(ch)
        images = []
        for sid in (SubsetId.S22, SubsetId.S23, SubsetId.S24):
            va, _ = spaces.vectors(sid, spaces.budget[sid])
            images.append(ch.g_a @ va)
        stacked = np.hstack(images)

        print_test_info("Независимость образов", {"config": EXAMPLE_1.label()}, numeric_rank(stacked), 4)

        self.assertEqual(numeric_rank(stacked), 4)


class TestSelectionCounts(unittest.TestCase):
    """Тесты для определения случая и чисел пар"""

    def setUp(self):
        """Настройка перед каждым тестом"""
        self.seed = 2017

    def counts_for(self, config):
        return selection_counts(subset_budgets(gen_rayleigh(config, self.seed)), config)

    def test_case_letters(self):
        """Тест букв случаев по соотношению антенн"""
        result = {
            "example-1": case_of(EXAMPLE_1),
            "example-2": case_of(EXAMPLE_2),
            "alice_surplus": case_of(NetworkConfig(8, 2, 4, 6, 5)),
            "example-3": case_of(EXAMPLE_3),
        }
        expected = {"example-1": "A", "example-2": "B", "alice_surplus": "C", "example-3": "D"}
        print_test_info("Буквы случаев", {"configs": 4}, result, expected)

        self.assertEqual(result, expected)

    def test_example_1_schedule(self):
        """Тест случая A(i): сначала S23, затем S22"""
        counts = self.counts_for(EXAMPLE_1)

        result = {"case": counts.case, "schedule": counts.schedule}
        expected = {"case": Case.A_I_A, "schedule": (SubsetId.S23, SubsetId.S22)}
        print_test_info("Пример 1", {"config": EXAMPLE_1.label()}, result, expected)

        self.assertEqual(result, expected)
        self.assertEqual(counts.as_dict(), {"q1": 0, "q2": 1, "q3": 0, "q4": 1, "q5": 0, "q6": 0, "q7": 0})

    def test_example_2_zeta(self):
        """Тест случая B: (zeta1..zeta6) = (0, 2, 1, 0, 0, 0)"""
        counts = self.counts_for(EXAMPLE_2)

        result = {"case": counts.case, "counts": counts.counts}
        expected = {"case": Case.B, "counts": (0, 2, 1, 0, 0, 0)}
        print_test_info("Пример 2", {"config": EXAMPLE_2.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_example_3_t(self):
        """Тест случая D: (t1..t5) = (2, 1, 1, 1, 0)"""
        counts = self.counts_for(EXAMPLE_3)

        result = {"case": counts.case, "counts": counts.counts}
        expected = {"case": Case.D, "counts": (2, 1, 1, 1, 0)}
        print_test_info("Пример 3", {"config": EXAMPLE_3.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_case_a_mirror(self):
        """Тест случая A(ii): зеркальное расписание S22, затем S23"""
        counts = self.counts_for(CONSTRAINED)

        result = {"case": counts.case, "schedule": counts.schedule}
        expected = {"case": Case.A_II_A, "schedule": (SubsetId.S22, SubsetId.S23)}
        print_test_info("Случай A(ii)", {"config": CONSTRAINED.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_alternation_round(self):
        """Тест чередования S22/S23: одна пара из каждого за раунд"""
        counts = self.counts_for(CSI)

        result = {"schedule": counts.schedule, "q3": counts.as_dict()["q3"]}
        expected = {"schedule": (SubsetId.S22, SubsetId.S23), "q3": 2}
        print_test_info("Раунд чередования", {"config": CSI.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_closed_form_totals(self):
        """Тест S.D.o.F. по числам пар"""
        result = {}
        for name, config in (("example-1", EXAMPLE_1), ("example-2", EXAMPLE_2), ("example-3", EXAMPLE_3),
                             ("default", DEFAULT), ("oneway", ONEWAY), ("csi", CSI)):
            pair, total = sum_sdof_closed_form(subset_budgets(gen_rayleigh(config, self.seed)), config)
            result[name] = (pair.as_tuple(), total)
        expected = {
            "example-1": ((2, 1), 3),
            "example-2": ((2, 3), 5),
            "example-3": ((4, 3), 7),
            "default": ((1, 1), 2),
            "oneway": ((1, 0), 1),
            "csi": ((2, 2), 4),
        }
        print_test_info("Суммарные S.D.o.F.", {"seed": self.seed}, result, expected)

        self.assertEqual(result, expected)


class TestConstructPrecoders(unittest.TestCase):
    """Тесты для конструктора пар прекодеров"""

    def setUp(self):
        """Настройка перед каждым тестом"""
        self.seed = 2017

    def test_example_constructions(self):
        """Тест построенных пар для опорных конфигураций"""
        result = {}
        for name, config in (("example-1", EXAMPLE_1), ("example-2", EXAMPLE_2), ("example-3", EXAMPLE_3),
                             ("default", DEFAULT), ("oneway", ONEWAY), ("csi", CSI)):
            ch = gen_rayleigh(config, self.seed)
            pair = construct_precoders(ch, config)
            result[name] = achieved_sdof(ch, pair).as_tuple()
        expected = {
            "example-1": (2, 1),
            "example-2": (2, 3),
            "example-3": (4, 3),
            "default": (1, 1),
            "oneway": (1, 0),
            "csi": (2, 2),
        }
        print_test_info("Построенные пары", {"seed": self.seed}, result, expected)

        self.assertEqual(result, expected)

    def test_example_1_provenance(self):
        """Тест происхождения столбцов примера 1"""
        ch = gen_rayleigh(EXAMPLE_1, self.seed)
        pair = construct_precoders(ch, EXAMPLE_1)

        print_test_info("Происхождение", {"config": EXAMPLE_1.label()}, pair.provenance, (SubsetId.S23, SubsetId.S22))

        self.assertEqual(pair.provenance, (SubsetId.S23, SubsetId.S22))

    def test_constrained_variant(self):
        """Тест ограничения по числу приёмных антенн"""
        ch = gen_rayleigh(CONSTRAINED, self.seed)
        free = construct_precoders(ch, CONSTRAINED)
        limited = construct_precoders(ch, CONSTRAINED, constrained=True)

        result = {
            "free": achieved_sdof(ch, free).as_tuple(),
            "limited": achieved_sdof(ch, limited).as_tuple(),
            "free_ok": receive_constraints_ok(ch, free),
            "limited_ok": receive_constraints_ok(ch, limited),
        }
        expected = {"free": (1, 2), "limited": (1, 1), "free_ok": False, "limited_ok": True}
        print_test_info("Ограниченный вариант", {"config": CONSTRAINED.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_power_loading(self):
        """Тест равного распределения мощности по столбцам"""
        config = NetworkConfig(7, 4, 7, 4, 2, power_dbm=20.0)
        ch = gen_rayleigh(config, self.seed)
        pair = construct_precoders(ch, config)
        power = config.power_w
        norms_a = np.linalg.norm(pair.v_a, axis=0) ** 2
        norms_b = np.linalg.norm(pair.v_b, axis=0) ** 2
        active_a = norms_a[norms_a > 0]
        active_b = norms_b[norms_b > 0]

        result = {"total_a": float(active_a.sum()), "total_b": float(active_b.sum())}
        print_test_info("Распределение мощности", {"config": config.label(), "P": power}, result,
                        {"total_a": power, "total_b": power})

        self.assertAlmostEqual(result["total_a"], power, places=9)
        self.assertAlmostEqual(result["total_b"], power, places=9)
        np.testing.assert_allclose(active_a, power / len(active_a))

    def test_seeded_free_parameters(self):
        """Тест случайных свободных параметров: S.D.o.F. не меняются"""
        ch = gen_rayleigh(EXAMPLE_3, self.seed)
        totals = {achieved_sdof(ch, construct_precoders(ch, EXAMPLE_3, seed=s)).total for s in range(5)}

        print_test_info("Случайные параметры", {"seeds": 5}, totals, {7})

        self.assertEqual(totals, {7})

    def test_swap_symmetry(self):
        """Тест: перестановка ролей переставляет компоненты пары"""
        ch = gen_rayleigh(EXAMPLE_2, self.seed)
        pair = construct_precoders(ch, EXAMPLE_2)
        forward = achieved_sdof(ch, pair)
        backward = achieved_sdof(ch.swapped(), pair.swapped())

        print_test_info("Симметрия ролей", {"config": EXAMPLE_2.label()}, backward.as_tuple(), (forward.ds_b, forward.ds_a))

        self.assertEqual(backward.as_tuple(), (forward.ds_b, forward.ds_a))

    def test_column_mismatch_raises(self):
        """Тест: разное число столбцов V_a и V_b вызывает InternalInconsistency"""
        with self.assertRaises(InternalInconsistency):
            PrecoderPair.loaded(np.ones((3, 2)), np.ones((3, 1)), 1.0)

    def test_random_configurations(self):
        """Тест совпадения формулы и построения на 500 случайных реализациях"""
        rng = np.random.default_rng(self.seed)
        mismatches = []
        worst_alignment = 0.0
        done = 0
        while done < 500:
            na_t, na_r, nb_t, nb_r, ne = (int(v) for v in rng.integers(1, 7, size=5))
            config = NetworkConfig(na_t, na_r, nb_t, nb_r, ne)
            ch = gen_rayleigh(config, rng.integers(2 ** 32))
            try:
                budget = subset_budgets(ch)
            except RankDegenerate:
                continue
            closed, _ = sum_sdof_closed_form(budget, config)
            pair = construct_precoders(ch, config)
            achieved = achieved_sdof(ch, pair)
            if achieved != closed:
                mismatches.append((config.label(), closed.as_tuple(), achieved.as_tuple()))
            worst_alignment = max(worst_alignment, alignment_residual(ch, pair))
            done += 1

        result = {"mismatches": mismatches, "alignment": worst_alignment}
        print_test_info("500 случайных конфигураций", {"range": "[1, 6]"}, result,
                        {"mismatches": [], "alignment_max": 1e-9})

        self.assertEqual(mismatches, [])
        self.assertLessEqual(worst_alignment, 1e-9)


class TestSdofEvaluation(unittest.TestCase):
    """Тесты для знаковых S.D.o.F. и проекции в выровненное множество"""

    def setUp(self):
        """Настройка перед каждым тестом"""
        self.seed = 23
        self.config = DEFAULT
        self.rng = np.random.default_rng(self.seed)

    def random_pair(self, ch, cols_a, cols_b):
        va = self.rng.standard_normal((ch.g_a.shape[1], cols_a)) + 1j * self.rng.standard_normal((ch.g_a.shape[1], cols_a))
        vb = self.rng.standard_normal((ch.g_b.shape[1], cols_b)) + 1j * self.rng.standard_normal((ch.g_b.shape[1], cols_b))
        width = max(cols_a, cols_b)
        va = np.hstack([va, np.zeros((va.shape[0], width - cols_a))])
        vb = np.hstack([vb, np.zeros((vb.shape[0], width - cols_b))])
        return PrecoderPair.loaded(va, vb, 1.0)

    def test_lemma1_bob_silent(self):
        """Тест: V_b = 0 даёт (rank(H_ba V_a) - rank(G_a V_a), 0)"""
        ch = gen_rayleigh(self.config, self.seed)
        pair = self.random_pair(ch, 2, 0)
        signed = lemma1_sdof(ch, pair)

        expected = (numeric_rank(ch.h_ba @ pair.v_a) - numeric_rank(ch.g_a @ pair.v_a), 0)
        print_test_info("V_b = 0", {"config": self.config.label()}, signed.as_tuple(), expected)

        self.assertEqual(signed.as_tuple(), expected)
        self.assertEqual(expected, (0, 0))

    def test_lemma1_unaligned_negative(self):
        """Тест: невыровненная пара полной мощности даёт отрицательные компоненты"""
        ch = gen_rayleigh(self.config, self.seed)
        pair = self.random_pair(ch, 3, 3)
        signed = lemma1_sdof(ch, pair)

        print_test_info("Невыровненная пара", {"config": self.config.label()}, signed.as_tuple(), "< 0")

        self.assertLess(signed.ds_a, 0)
        self.assertLess(signed.ds_b, 0)

    def test_lemma1_matches_achieved_on_constructed(self):
        """Тест: на выровненной паре знаковые S.D.o.F. совпадают с достигнутыми"""
        ch = gen_rayleigh(EXAMPLE_3, self.seed)
        pair = construct_precoders(ch, EXAMPLE_3)

        result = lemma1_sdof(ch, pair).as_tuple()
        expected = achieved_sdof(ch, pair).as_tuple()
        print_test_info("Знаковые = достигнутые", {"config": EXAMPLE_3.label()}, result, expected)

        self.assertEqual(result, expected)

    def test_align_project_random_pairs(self):
        """Тест проекции: 200 случайных пар, выравнивание и неубывание компонент"""
        configs = [DEFAULT, EXAMPLE_1, CSI, NetworkConfig(4, 2, 3, 3, 3)]
        violations = []
        worst_alignment = 0.0
        for i in range(200):
            config = configs[i % len(configs)]
            ch = gen_rayleigh(config, self.rng.integers(2 ** 32))
            cols_a = int(self.rng.integers(1, config.na_t + 1))
            cols_b = int(self.rng.integers(1, config.nb_t + 1))
            pair = self.random_pair(ch, cols_a, cols_b)
            before = lemma1_sdof(ch, pair)
            projected = align_project(ch, pair)
            after = lemma1_sdof(ch, projected)
            if after.ds_a < before.ds_a or after.ds_b < before.ds_b:
                violations.append((config.label(), before.as_tuple(), after.as_tuple()))
            worst_alignment = max(worst_alignment, alignment_residual(ch, projected))

        result = {"violations": violations, "alignment": worst_alignment}
        print_test_info("Проекция 200 пар", {"configs": len(configs)}, result,
                        {"violations": [], "alignment_max": 1e-9})

        self.assertEqual(violations, [])
        self.assertLessEqual(worst_alignment, 1e-9)

    def test_align_project_keeps_constructed_pairs(self):
        """Тест: проекция уже выровненной пары сохраняет подпространства и знаковые S.D.o.F."""
        configs = [EXAMPLE_1, EXAMPLE_2, EXAMPLE_3, DEFAULT, CSI, CONSTRAINED]
        changed = []
        for config in configs:
            for seed in range(5):
                ch = gen_rayleigh(config, seed)
                pair = construct_precoders(ch, config)
                projected = align_project(ch, pair)
                before = lemma1_sdof(ch, pair).as_tuple()
                after = lemma1_sdof(ch, projected).as_tuple()
                spans = []
                for old, new in ((pair.v_a, projected.v_a), (pair.v_b, projected.v_b)):
                    joint = np.hstack([old, new])
                    tol = 1e-9 * max(np.linalg.norm(joint, 2), 1e-300)
                    spans.append((numeric_rank(old, tol), numeric_rank(new, tol), numeric_rank(joint, tol)))
                same_spans = all(r_old == r_new == r_joint for r_old, r_new, r_joint in spans)
                if before != after or not same_spans:
                    changed.append((config.label(), seed, before, after, spans))

        print_test_info("Проекция построенных пар", {"configs": [c.label() for c in configs], "seeds": 5},
                        changed, [])

        self.assertEqual(changed, [])


if __name__ == '__main__':
    unittest.main()
