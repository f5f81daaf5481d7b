import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from removability.error_handlers import QuadratureError
from removability.geometry import Box, Cube, Ring
from removability.weights import (
    AxisWeight,
    ConstantWeight,
    DistanceWeight,
    PowerWeight,
    ProductWeight,
    cell_masses,
    estimate_annular_decay,
    estimate_doubling,
    measure_box,
    measure_ring,
    power_integrability,
    profile_weight,
    weight_from_config,
)

LOG_SILVER = math.log(1 + math.sqrt(2))


class WeightCatalogueTests(SimpleTestCase):
    def test_from_config(self):
        w = weight_from_config({'kind': 'power', 'gamma': -1, 'center': [0.5, 0.0]})
        self.assertEqual(w, PowerWeight(-1.0, (0.5, 0.0)))
        product = weight_from_config({
            'kind': 'product',
            'factors': [{'kind': 'constant', 'value': 2.0}, {'kind': 'axis', 'beta': 1.0}],
        })
        self.assertIsInstance(product, ProductWeight)
        self.assertAlmostEqual(float(product(np.array([0.3, -0.5]))), 0.6)

    def test_rejects_bad_configs(self):
        with self.assertRaises(ValidationError):
            weight_from_config({'kind': 'nope'})
        with self.assertRaises(ValidationError):
            weight_from_config({'kind': 'power', 'gamma': -2.0})
        with self.assertRaises(ValidationError):
            weight_from_config({'kind': 'power', 'gamma': 1.0, 'radius': 2})

    def test_distance_weight(self):
        w = DistanceWeight(beta=1.0, points=((0.0, 0.0),), segments=(((1.0, -1.0), (1.0, 1.0)),))
        self.assertAlmostEqual(float(w(np.array([0.25, 0.0]))), 0.25)
        self.assertAlmostEqual(float(w(np.array([0.75, 0.5]))), 0.25)

    def test_config_round_trip(self):
        w = AxisWeight(beta=-0.5, axis=1, offset=0.25)
        self.assertEqual(weight_from_config(w.to_config()), w)


class MeasureBoxTests(SimpleTestCase):
    def test_lebesgue_area(self):
        self.assertAlmostEqual(measure_box(ConstantWeight(), Cube((0.5, 0.5), 1.0), tol=1e-10).value, 1.0)

    def test_inverse_distance_on_square(self):
        est = measure_box(PowerWeight(-1.0), Cube((0, 0), 2.0), tol=1e-8)
        expected = 8 * LOG_SILVER
        self.assertLess(abs(est.value - expected) / expected, 1e-6)

    def test_distance_on_unit_square(self):
        est = measure_box(PowerWeight(1.0), Box((0.0, 0.0), (1.0, 1.0)), tol=1e-8)
        expected = (math.sqrt(2) + LOG_SILVER) / 3
        self.assertAlmostEqual(est.value, expected, delta=1e-6)

    def test_homogeneous_scaling(self):
        box = Box((-0.3, -0.2), (0.7, 0.5))
        for gamma in (-1.0, 1.0):
            w = PowerWeight(gamma)
            small = measure_box(w, box, tol=1e-9).value
            large = measure_box(w, Box((-0.6, -0.4), (1.4, 1.0)), tol=1e-9).value
            self.assertLess(abs(large / small - 2 ** (2 + gamma)) / 2 ** (2 + gamma), 1e-6)

    def test_additivity(self):
        w = PowerWeight(-1.0, center=(0.1, 0.2))
        whole = measure_box(w, Cube((0, 0), 1.0), tol=1e-8)
        parts = [measure_box(w, Cube((x, y), 0.5), tol=1e-8) for x in (-0.25, 0.25) for y in (-0.25, 0.25)]
        total = math.fsum(p.value for p in parts)
        bound = 2 * (whole.abs_error_bound + sum(p.abs_error_bound for p in parts))
        self.assertLessEqual(abs(total - whole.value), max(bound, 1e-12))

    def test_exact_axis_measure(self):
        est = measure_box(AxisWeight(beta=1.0), Box((0.0, 0.0), (2.0, 1.0)))
        self.assertAlmostEqual(est.value, 2.0)
        self.assertEqual(est.evaluations, 0)

    def test_budget_exhaustion_carries_best_estimate(self):
        with self.assertRaises(QuadratureError) as ctx:
            measure_box(PowerWeight(-1.9), Cube((0, 0), 2.0), tol=1e-12, max_evaluations=2000)
        self.assertGreater(ctx.exception.best_estimate.value, 0)
        self.assertGreater(ctx.exception.achieved_tol, 1e-12)


class MeasureRingTests(SimpleTestCase):
    def test_lebesgue_rings(self):
        unit = Cube((0, 0), 1.0)
        self.assertAlmostEqual(measure_ring(ConstantWeight(), Ring(unit, 0.5)).value, 0.75)
        self.assertAlmostEqual(measure_ring(ConstantWeight(), Ring(unit, 0.1)).value, 0.19)

    def test_annular_ratio_formula(self):
        cube = Cube((0.3, 0.1), 1.7)
        total = measure_box(ConstantWeight(), cube).value
        for alpha in (0.5, 0.25, 0.01):
            ratio = measure_ring(ConstantWeight(), Ring(cube, alpha)).value / total
            self.assertAlmostEqual(ratio, alpha * (2 - alpha), delta=1e-10)

    def test_inverse_distance_ring(self):
        est = measure_ring(PowerWeight(-1.0), Ring(Cube((0, 0), 2.0), 0.5), tol=1e-8)
        self.assertLess(abs(est.value - 4 * LOG_SILVER) / (4 * LOG_SILVER), 1e-6)


class CellMassTests(SimpleTestCase):
    def test_masses_sum_to_measure(self):
        cube = Cube((0, 0), 2.0)
        masses = cell_masses(PowerWeight(-1.0), cube, 16, tol=1e-8)
        self.assertLess(abs(masses.sum() - 8 * LOG_SILVER) / (8 * LOG_SILVER), 1e-3)
        flat = cell_masses(ConstantWeight(), cube, 16)
        self.assertTrue(np.allclose(flat, 4.0 / 256))


class ExponentTests(SimpleTestCase):
    def test_lebesgue_exponents(self):
        exps = profile_weight(ConstantWeight(), Cube((0, 0), 2.0), samples=32, rng_seed=7)
        self.assertTrue(3.9 <= exps.doubling_constant <= 4.1)
        self.assertTrue(1.95 <= exps.delta <= 2.05)
        self.assertTrue(1.95 <= exps.delta_prime <= 2.05)
        self.assertTrue(0.95 <= exps.sigma <= 1.0)
        self.assertLessEqual(exps.sigma_constant, 2.0)

    def test_deterministic(self):
        domain = Cube((0, 0), 2.0)
        first = estimate_doubling(PowerWeight(1.0), domain, samples=16, rng_seed=3)
        second = estimate_doubling(PowerWeight(1.0), domain, samples=16, rng_seed=3)
        self.assertEqual(first.to_dict(), second.to_dict())

    def test_positive_power_homogeneity(self):
        exps = estimate_doubling(PowerWeight(1.0), Cube((0, 0), 2.0), samples=32, rng_seed=11)
        self.assertLessEqual(exps.delta, 2.0)
        self.assertGreaterEqual(exps.delta_prime, 2.5)
        self.assertGreater(exps.anchored_samples, 0)

    def test_exponent_sanity_after_clamping(self):
        exps = profile_weight(PowerWeight(-1.0), Cube((0, 0), 2.0), samples=16, rng_seed=5)
        self.assertLessEqual(exps.delta, 2.0)
        self.assertGreaterEqual(exps.delta_prime, 2.0)
        self.assertLessEqual(exps.sigma, 1.0)
        self.assertGreaterEqual(exps.sigma, exps.delta - 1 - 1e-12)
        for clamp in exps.clamps:
            self.assertIn('reason', clamp)

    def test_singular_annular_decay(self):
        fit = estimate_annular_decay(PowerWeight(-1.0), Cube((0, 0), 2.0), samples=4, rng_seed=2)
        self.assertTrue(0 < fit.sigma <= 1)
        self.assertTrue(fit.monotone)


class IntegrabilityTests(SimpleTestCase):
    def test_threshold(self):
        self.assertTrue(power_integrability(2, 2, 2.5).finite)
        self.assertFalse(power_integrability(2, 2, 1.5).finite)
        self.assertTrue(power_integrability(2, 1, 1e-4).finite)

    def test_quadrature_cross_check(self):
        self.assertEqual(power_integrability(2, 2, 2.5).quadrature_verdict, 'converges')
        report = power_integrability(2, 2, 1.5)
        self.assertEqual(report.quadrature_verdict, 'diverges')
        self.assertGreater(report.partial_sums[-1], 10 * report.partial_sums[0])

    def test_rejects_bad_gamma(self):
        with self.assertRaises(ValidationError):
            power_integrability(2, 2, -2.0)
