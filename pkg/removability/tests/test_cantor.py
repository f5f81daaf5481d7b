import math
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from removability.cantor import (
    CantorConfig,
    ProductConfig,
    build_levels,
    check_nesting,
    cover_levels,
    covers,
    feasible_eta,
    level_length,
    measure_level,
    product_count_bound,
    product_covers,
    removed_length,
    ring_free_check,
    union_mass,
)
from removability.weights import ConstantWeight

PARAMETERS = ((0.5, 0.25), (0.3, 0.4), (0.9, 0.1))


class CantorConfigTests(SimpleTestCase):
    def test_upsilon_sets_tau(self):
        self.assertEqual(CantorConfig(eta=0.5, upsilon=2).tau, 0.25)

    def test_rejects_mismatched_tau(self):
        with self.assertRaises(ValidationError):
            CantorConfig(eta=0.5, tau=0.3, upsilon=2)

    def test_rejects_missing_or_large_tau(self):
        with self.assertRaises(ValidationError):
            CantorConfig(eta=0.5)
        with self.assertRaises(ValidationError):
            CantorConfig(eta=0.5, tau=0.5)

    def test_feasible_eta(self):
        self.assertEqual(feasible_eta(0.5, 0.25), 0.5)
        tau = 2.0 ** -1.1
        eta = feasible_eta(0.5, tau)
        self.assertAlmostEqual(CantorConfig(eta=eta, tau=tau).removal_constant, 0.5)
        with self.assertRaises(ValidationError):
            feasible_eta(0.0, 0.25)


class LevelLengthTests(SimpleTestCase):
    def test_examples(self):
        cfg = CantorConfig(eta=0.5, tau=0.25)
        self.assertAlmostEqual(level_length(cfg, 1), 0.4375, places=15)
        self.assertAlmostEqual(level_length(cfg, 2), 0.203125, places=15)

    def test_formula_matches_simulation(self):
        for eta, tau in PARAMETERS:
            cfg = CantorConfig(eta=eta, tau=tau, levels=30)
            for level in build_levels(cfg):
                self.assertLessEqual(abs(level_length(cfg, level.k) - float(level.length)), 1e-12)
                self.assertEqual(level.count, 2 ** level.k)

    def test_removal_step(self):
        for eta, tau in PARAMETERS:
            cfg = CantorConfig(eta=eta, tau=tau)
            for k in range(12):
                step = (level_length(cfg, k) - eta * tau ** (k + 1)) / 2
                self.assertLessEqual(abs(level_length(cfg, k + 1) - step), 1e-12)

    def test_removed_and_surviving_length_sum_to_one(self):
        cfg = CantorConfig(eta=0.3, tau=0.4, levels=10)
        for level in build_levels(cfg):
            self.assertEqual(level.removed + level.count * level.length, Fraction(1))
        self.assertAlmostEqual(removed_length(cfg, 10), float(build_levels(cfg)[-1].removed))
        self.assertAlmostEqual(removed_length(cfg), 0.6)

    def test_explicit_intervals_are_disjoint(self):
        level = build_levels(CantorConfig(eta=0.5, tau=0.25, levels=6))[6]
        intervals = level.intervals()
        self.assertEqual(len(intervals), 64)
        self.assertTrue((intervals[1:, 0] > intervals[:-1, 1]).all())

    def test_large_levels_are_implicit(self):
        level = build_levels(CantorConfig(eta=0.5, tau=0.25, levels=20))[20]
        self.assertIsNone(level.intervals())
        self.assertEqual(level.count, 2 ** 20)


class CoverTests(SimpleTestCase):
    def setUp(self):
        self.cfg = CantorConfig(eta=0.5, tau=0.25, levels=8)

    def test_side_and_alpha(self):
        cover = covers(self.cfg, 2)
        margin = 0.5 * 0.25 ** 2 / 3
        self.assertAlmostEqual(cover.side, 0.203125 + 2 * margin)
        self.assertAlmostEqual(cover.width, margin * 0.75)
        self.assertAlmostEqual(cover.alpha, 2 * cover.width / cover.side)
        self.assertEqual(len(cover.centers), 4)
        self.assertGreater(cover.cube_gap, 0)
        self.assertTrue((cover.centers[:, 1] == 0).all())

    def test_alpha_is_comparable_to_power_of_two_tau(self):
        scaled = {
            k: level.alpha / (2 * self.cfg.tau) ** k
            for k, level in zip(range(20, 32), cover_levels(self.cfg, ks=range(20, 32)))
        }
        for k in range(20, 31):
            self.assertLess(abs(scaled[k] - scaled[k + 1]) / scaled[k], 1e-6)

    def test_nesting(self):
        for k in range(1, 6):
            self.assertTrue(check_nesting(self.cfg, k)['ok'], k)

    def test_outer_children_touch_the_parent_hole(self):
        for k in range(1, 6):
            report = check_nesting(self.cfg, k)
            self.assertTrue(report['ok'], k)
            self.assertLess(abs(report['worst_margin']), 1e-12, k)

    def test_nesting_fails_without_safety_margin(self):
        report = check_nesting(self.cfg, 2, safety=1)
        self.assertFalse(report['ok'])
        self.assertLess(report['worst_margin'], 0)

    def test_rings_avoid_the_set(self):
        self.assertEqual(ring_free_check(self.cfg, 2, 7), 0)

    def test_half_mode_is_flagged(self):
        cover = covers(self.cfg, 2, mode='half', safety=1)
        self.assertIn('ring_meets_set', cover.flags)

    def test_measure_level(self):
        cover = measure_level(covers(self.cfg, 3), ConstantWeight())
        self.assertAlmostEqual(cover.mu_Q, cover.side ** 2)
        self.assertAlmostEqual(cover.mu_R, cover.side ** 2 * cover.alpha * (2 - cover.alpha))
        self.assertAlmostEqual(union_mass(cover), 8 * cover.side ** 2)

    def test_union_mass_needs_measures(self):
        with self.assertRaises(ValidationError):
            union_mass(covers(self.cfg, 1))


class ProductTests(SimpleTestCase):
    def setUp(self):
        self.base = CantorConfig(eta=0.5, tau=0.25, levels=6)

    def test_synthetic_counts_within_bound(self):
        pcfg = ProductConfig(self.base, omega=0.5)
        for k in range(1, 7):
            level = product_covers(pcfg, k)
            self.assertEqual(level.count, 2 ** k * 2 ** math.floor(0.5 * k))
            self.assertLessEqual(level.count, product_count_bound(pcfg, k))

    def test_synthetic_centers(self):
        level = product_covers(ProductConfig(self.base, omega=0.5), 4)
        self.assertEqual(len(level.centers), 64)
        self.assertGreater(level.cube_gap, 0)

    def test_omega_zero_is_e_times_point(self):
        level = product_covers(ProductConfig(self.base, omega=0.0), 3)
        self.assertEqual(level.count, 8)

    def test_user_counts_assume_hypothesis(self):
        pcfg = ProductConfig(self.base, omega=0.5, f_counts=(1, 2, 9))
        level = product_covers(pcfg, 3)
        self.assertTrue(level.hypothesis_assumed)
        self.assertIn('f_count_exceeds_bound', level.flags)
        self.assertIsNone(level.centers)

    def test_rejects_omega_out_of_range(self):
        with self.assertRaises(ValidationError):
            ProductConfig(self.base, omega=1.0)
