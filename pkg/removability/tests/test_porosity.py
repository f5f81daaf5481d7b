import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from removability.cantor import CantorConfig, cover_levels, measure_level
from removability.extension import measure_constants
from removability.porosity import (
    LevelData,
    PorosityQuery,
    build_report,
    cantor_closed_form,
    closed_form_report,
    criterion_terms,
    divergence_test,
    feasible_region,
    lowered_exponent_query,
    monotonicity_spot_check,
    product_closed_form,
    ratio_closed_form,
    sufficient_lengthQ,
    sufficient_lengthR,
    sufficient_measureQ,
)
from removability.weights import ConstantWeight


def cantor_eta(upsilon):
    """A removal scale keeping eta*tau/(1 - 2 tau) below 1/2."""
    tau = 2.0 ** -upsilon
    return min(0.5, 0.5 * (1 - 2 * tau) / tau)


class PorosityQueryTests(SimpleTestCase):
    def test_exponents(self):
        q = PorosityQuery(s=3, p=1, c1=2)
        self.assertEqual(q.alpha_exponent, -3.0)
        self.assertEqual(q.mass_exponent, 1.0)

    def test_rejects_bad_exponents(self):
        with self.assertRaises(ValidationError):
            PorosityQuery(s=1, p=1)
        with self.assertRaises(ValidationError):
            PorosityQuery(s=2, p=0.5)
        with self.assertRaises(ValidationError):
            PorosityQuery(s=2, p=1, c1=0.5)
        with self.assertRaises(ValidationError):
            PorosityQuery(s=2, p=1, delta=2, sigma=1.5)

    def test_lowered_exponent(self):
        q = lowered_exponent_query(3, 0.5, c1=1.5)
        self.assertEqual((q.s, q.p), (3, 2.5))
        with self.assertRaises(ValidationError):
            lowered_exponent_query(1.5, 0.75)


class CriterionTermTests(SimpleTestCase):
    def test_single_cube_term(self):
        level = LevelData(k=1, count=1, alpha=0.5, mu_R=0.25, mu_Q=1.0, side=1.0)
        series = criterion_terms([level], PorosityQuery(s=2, p=1))
        self.assertAlmostEqual(float(series.terms[0]), 1.0, places=12)

    def test_sufficient_measure_term(self):
        level = LevelData(k=1, count=1, alpha=0.5, mu_R=0.25, mu_Q=1.0, side=1.0)
        series = sufficient_measureQ([level], PorosityQuery(s=2, p=1, sigma=1))
        self.assertAlmostEqual(float(series.terms[0]), 0.5, places=12)
        self.assertEqual(series.provenance['sigma'], 'query')

    def test_homogeneity_bound_for_sigma(self):
        level = LevelData(k=1, count=1, alpha=0.5, mu_Q=1.0)
        series = sufficient_measureQ([level], PorosityQuery(s=2, p=1, delta=2))
        self.assertEqual(series.provenance['sigma'], 'homogeneity-bound')
        self.assertAlmostEqual(float(series.terms[0]), 0.5, places=12)

    def test_per_cube_data_matches_repeated_scalar(self):
        q = PorosityQuery(s=2.5, p=1.5, c1=1.2)
        scalar = LevelData(k=1, count=4, alpha=0.2, mu_R=0.03)
        explicit = LevelData(k=1, count=4, alpha=np.full(4, 0.2), mu_R=np.full(4, 0.03))
        self.assertAlmostEqual(
            criterion_terms([scalar], q).log_terms[0], criterion_terms([explicit], q).log_terms[0], places=12
        )

    def test_length_forms_agree(self):
        q = PorosityQuery(s=3, p=1.5, c1=1.3, delta=1.7, sigma=0.8)
        levels = [LevelData(k=k, count=2 ** k, alpha=0.3 ** k, side=0.4 ** k) for k in range(1, 9)]
        by_q = sufficient_lengthQ(levels, q).log_terms
        by_r = sufficient_lengthR(levels, q).log_terms
        self.assertTrue(np.allclose(by_q, by_r, rtol=0, atol=1e-10))

    def test_missing_ring_mass(self):
        with self.assertRaises(ValidationError):
            criterion_terms([LevelData(k=1, count=1, alpha=0.5)], PorosityQuery(s=2, p=1))

    def test_terms_stay_finite_in_log_domain(self):
        levels = [LevelData(k=k, count=2 ** k, alpha=1e-300 ** 0.5, mu_R=1e-300) for k in range(1, 3)]
        series = criterion_terms(levels, PorosityQuery(s=4, p=1, c1=2))
        self.assertTrue(np.isfinite(series.log_terms).all())


class DivergenceTestTests(SimpleTestCase):
    def test_constant_terms_diverge(self):
        self.assertEqual(divergence_test(np.ones(12)).verdict, 'diverges')

    def test_geometric_decay_converges(self):
        verdict = divergence_test(0.5 ** np.arange(12))
        self.assertEqual(verdict.verdict, 'converges')
        self.assertAlmostEqual(verdict.ratio, 0.5)

    def test_geometric_growth_diverges(self):
        self.assertEqual(divergence_test(1.05 ** np.arange(12)).verdict, 'diverges')

    def test_inconclusive_band(self):
        verdict = divergence_test(0.99 ** np.arange(12))
        self.assertEqual(verdict.verdict, 'inconclusive')
        self.assertAlmostEqual(verdict.ratio, 0.99)

    def test_short_horizon(self):
        with self.assertRaises(ValidationError):
            divergence_test(np.ones(3))


class ClosedFormTests(SimpleTestCase):
    def test_product_form_with_omega_zero(self):
        for upsilon in np.linspace(1.1, 4.0, 10):
            for s in np.linspace(1.2, 6.0, 10):
                cantor = cantor_closed_form(upsilon, s, 1.1, 1.3, 1.8, 0.9)
                product = product_closed_form(upsilon, 0.0, s, 1.1, 1.3, 1.8, 0.9)
                self.assertEqual(cantor.lhs, product.lhs)
                self.assertEqual(cantor.satisfied, product.satisfied)

    def test_ratio_is_power_of_lhs(self):
        for upsilon, s, omega in ((1.5, 3.0, 0.0), (2.0, 2.5, 0.3), (3.7, 1.4, 0.8)):
            lhs = product_closed_form(upsilon, omega, s, 1.2, 1.5, 1.8, 0.7).lhs
            ratio = ratio_closed_form(upsilon, s, 1.2, 1.5, 1.8, 0.7, omega=omega)
            self.assertAlmostEqual(math.log2(ratio), lhs, places=10)

    def test_boundary_counts_as_porous(self):
        # s = 2, p = 1, c1 = 1, delta = 2, sigma = 1 gives lhs = 2 - upsilon
        self.assertTrue(cantor_closed_form(2, 2, 1, 1, 2, 1).satisfied)
        self.assertFalse(cantor_closed_form(2.1, 2, 1, 1, 2, 1).satisfied)

    def test_report_verdict(self):
        q = PorosityQuery(s=3, p=1, c1=1, delta=2, sigma=1)
        data = closed_form_report(1.1, q).to_dict()
        self.assertEqual(data['criterion_used'], 'closed-form')
        self.assertEqual(data['verdict'], 'diverges')
        self.assertNotIn('t_k', data)

    def test_report_needs_exponents(self):
        with self.assertRaises(ValidationError):
            closed_form_report(1.1, PorosityQuery(s=3, p=1))


class FeasibleRegionTests(SimpleTestCase):
    def test_lebesgue_region_is_nonempty(self):
        region = feasible_region(1, 1, 2, 1)
        self.assertTrue(region.expected_nonempty)
        self.assertTrue(region.nonempty)
        self.assertFalse(region.inconsistent)
        self.assertEqual(region.mask.shape, (41, 40))

    def test_product_region_is_nonempty(self):
        self.assertTrue(feasible_region(1, 1, 2, 1, omega=0.5).nonempty)

    def test_region_matches_closed_form(self):
        region = feasible_region(1.5, 1.2, 2, 1, points=8)
        for i, upsilon in enumerate(region.upsilons):
            for j, s in enumerate(region.ss):
                self.assertEqual(region.mask[i, j], cantor_closed_form(upsilon, s, 1.5, 1.2, 2, 1).satisfied)

    def test_monotonicity_spot_check(self):
        report = monotonicity_spot_check(1, 2, 1, samples=100, rng_seed=4)
        self.assertGreater(report['checked'], 0)
        self.assertEqual(set(report['violations']), {'s', 'p'})


class CantorPorosityTests(SimpleTestCase):
    """Criterion terms over generated covers for Lebesgue measure (delta = 2, sigma = 1)."""

    def verdict(self, upsilon, s, c1, p=1):
        cfg = CantorConfig(eta=cantor_eta(upsilon), upsilon=upsilon, levels=14)
        levels = [measure_level(level, ConstantWeight()) for level in cover_levels(cfg)]
        q = PorosityQuery(s=s, p=p, c1=c1, delta=2, sigma=1)
        report = build_report(levels, q)
        self.assertEqual(cantor_closed_form(upsilon, s, p, c1, 2, 1).satisfied, report.verdict.verdict == 'diverges')
        return report

    def test_porous_tuples_diverge(self):
        for c1 in (1, 1.5):
            for upsilon, s in ((1.1, 3), (1.2, 3), (1.3, 2.5)):
                self.assertEqual(self.verdict(upsilon, s, c1).verdict.verdict, 'diverges', (upsilon, s, c1))

    def test_non_porous_tuple_converges(self):
        self.assertLess(cantor_closed_form(3, 1.2, 1, 1, 2, 1).lhs, -1)
        report = self.verdict(3, 1.2, 1)
        self.assertEqual(report.verdict.verdict, 'converges')
        data = report.to_dict()
        self.assertEqual(data['k'], list(range(1, 15)))
        self.assertEqual(len(data['t_k']), 14)
        self.assertEqual(data['criterion_used'], 'exact-mu(R)')

    def test_asymptotic_ratio(self):
        upsilon, s, c1 = 3, 1.2, 1
        report = self.verdict(upsilon, s, c1)
        expected = ratio_closed_form(upsilon, s, 1, c1, 2, 1)
        self.assertLess(abs(report.verdict.ratio - expected) / expected, 0.05)


class MeasuredExponentTests(SimpleTestCase):
    """The same checks with c1 taken from the measured one-step constant."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        constants = measure_constants(
            ConstantWeight(), alphas=(0.2,), scales=(1.0,), resolution=64, half_alphas=(0.5,)
        )
        cls.c1 = constants.c1

    def verdict(self, upsilon, s):
        cfg = CantorConfig(eta=cantor_eta(upsilon), upsilon=upsilon, levels=14)
        levels = [measure_level(level, ConstantWeight()) for level in cover_levels(cfg)]
        return build_report(levels, PorosityQuery(s=s, p=1, c1=self.c1, delta=2, sigma=1))

    def test_measured_exponent_range(self):
        self.assertGreaterEqual(self.c1, 1.0)
        self.assertLess(self.c1, 7.0)

    def test_porous_tuple_diverges(self):
        report = self.verdict(1.1, 3)
        self.assertTrue(cantor_closed_form(1.1, 3, 1, self.c1, 2, 1).satisfied)
        self.assertEqual(report.verdict.verdict, 'diverges')

    def test_non_porous_tuple_converges(self):
        report = self.verdict(3, 1.2)
        self.assertLess(cantor_closed_form(3, 1.2, 1, self.c1, 2, 1).lhs, -1)
        self.assertEqual(report.verdict.verdict, 'converges')

    def test_feasible_region_is_nonempty(self):
        self.assertTrue(feasible_region(1, self.c1, 2, 1).nonempty)
        self.assertTrue(feasible_region(1, self.c1, 2, 1, omega=0.5).nonempty)
