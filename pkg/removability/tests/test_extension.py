import json
import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from removability.error_handlers import ExtensionError
from removability.extension import (
    alpha_power_bracket,
    default_suite,
    extend_full,
    extend_half,
    extend_once,
    iteration_count,
    measure_constants,
    ring_mask,
)
from removability.geometry import Cube, Ring
from removability.grid import GridFunction
from removability.reports import render
from removability.weights import AxisWeight, ConstantWeight

LEBESGUE = ConstantWeight()
UNIT = Cube((0.0, 0.0), 1.0)


def ring_function(func, alpha, resolution=128, cube=UNIT):
    return GridFunction.sample(func, cube, resolution, mask=ring_mask(cube, resolution, alpha))


def x1(points):
    return points[..., 0]


def bumpy(points):
    return np.sin(3 * points[..., 0]) * np.cos(2 * points[..., 1]) + points[..., 1]


class IterationCountTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(iteration_count(0.6), 0)
        self.assertEqual(iteration_count(0.5), 0)
        self.assertEqual(iteration_count(0.3), 1)
        self.assertEqual(iteration_count(0.25), 1)
        self.assertEqual(iteration_count(0.1), 3)

    def test_power_law(self):
        rng = np.random.default_rng(8)
        for alpha in rng.uniform(1e-4, 1.0, size=100):
            m = iteration_count(alpha)
            self.assertGreaterEqual(2 ** m * alpha, 0.5)
            if m:
                self.assertLess(2 ** (m - 1) * alpha, 0.5)
            C1 = rng.uniform(1.01, 16.0)
            self.assertTrue(alpha_power_bracket(alpha, C1)['holds'], (alpha, C1))

    def test_rejects_bad_alpha(self):
        with self.assertRaises(ValidationError):
            iteration_count(0.0)
        with self.assertRaises(ValidationError):
            alpha_power_bracket(0.2, 1.0)


class ExtendOnceTests(SimpleTestCase):
    def test_ring_values_are_kept_bitwise(self):
        u = ring_function(bumpy, 0.2)
        step = extend_once(u, Ring(UNIT, 0.2), LEBESGUE)
        self.assertTrue(np.array_equal(step.grid.values[step.input_mask], u.values[step.input_mask]))
        self.assertTrue(np.array_equal(step.grid.defined, ring_mask(UNIT, 128, 0.4)))
        self.assertTrue(np.isfinite(step.grid.values[step.output_mask]).all())

    def test_constants_are_reproduced(self):
        for w in (LEBESGUE, AxisWeight(beta=1.0)):
            u = ring_function(lambda x: np.full(x.shape[:-1], -0.7), 0.2)
            step = extend_once(u, Ring(UNIT, 0.2), w)
            self.assertTrue(np.all(step.grid.values[step.output_mask] == -0.7))

    def test_linearity(self):
        ring = Ring(UNIT, 0.2)
        u, v = ring_function(x1, 0.2), ring_function(bumpy, 0.2)
        combined = GridFunction(UNIT, np.where(u.defined, 2 * u.values - 3 * v.values, np.nan), u.mask)
        eu = extend_once(u, ring, LEBESGUE).grid.values
        ev = extend_once(v, ring, LEBESGUE).grid.values
        step = extend_once(combined, ring, LEBESGUE)
        mask = step.output_mask
        self.assertTrue(np.allclose(step.grid.values[mask], (2 * eu - 3 * ev)[mask], rtol=0, atol=1e-12))

    def test_gradient_matches_finite_differences(self):
        step = extend_once(ring_function(bumpy, 0.2), Ring(UNIT, 0.2), LEBESGUE)
        rng = np.random.default_rng(3)
        points = rng.uniform(-0.4, 0.4, size=(400, 2))
        rho = np.abs(points).max(axis=1)
        points = points[(rho > 0.31) & (rho < 0.39)][:40]
        grads = step.gradient(points)
        h = 1e-7
        for axis in (0, 1):
            shift = np.zeros(2)
            shift[axis] = h
            fd = (step.evaluate(points + shift) - step.evaluate(points - shift)) / (2 * h)
            self.assertTrue(np.allclose(fd, grads[:, axis], rtol=1e-3, atol=1e-4))

    def test_report(self):
        step = extend_once(ring_function(x1, 0.2), Ring(UNIT, 0.2), LEBESGUE)
        data = json.loads(render(step.to_dict()))
        self.assertGreater(data['ratio_lp'], 1.0)
        self.assertEqual(data['uncovered_cells'], step.uncovered)
        self.assertIn('cubes', data['decomposition'])

    def test_rejects_mismatched_grid(self):
        u = ring_function(x1, 0.2, cube=Cube((0.1, 0.0), 1.0))
        with self.assertRaises(ValidationError):
            extend_once(u, Ring(UNIT, 0.2), LEBESGUE)

    def test_rejects_input_missing_on_ring(self):
        u = ring_function(x1, 0.1)
        with self.assertRaises(ValidationError):
            extend_once(u, Ring(UNIT, 0.2), LEBESGUE)

    def test_rejects_thick_ring(self):
        with self.assertRaises(ValidationError):
            extend_once(ring_function(x1, 0.5), Ring(UNIT, 0.5), LEBESGUE)

    def test_ring_thinner_than_grid(self):
        with self.assertRaises(ExtensionError):
            extend_once(ring_function(x1, 0.1, resolution=16), Ring(UNIT, 0.1), LEBESGUE)


class ExtendFullTests(SimpleTestCase):
    def test_full_extension(self):
        u = ring_function(bumpy, 0.1)
        grid, constants, steps = extend_full(u, UNIT, 0.1, LEBESGUE)
        self.assertEqual(constants.m, 3)
        self.assertEqual(len(steps), 4)
        self.assertTrue(grid.defined.all())
        self.assertTrue(np.isfinite(grid.values).all())
        self.assertTrue(np.array_equal(grid.values[steps[0].input_mask], u.values[steps[0].input_mask]))

    def test_ratios_telescope(self):
        _, constants, steps = extend_full(ring_function(bumpy, 0.1), UNIT, 0.1, LEBESGUE)
        product = math.prod(s.ratio for s in steps)
        self.assertLessEqual(constants.measured_ratio, product * 1.01)
        for before, after in zip(steps, steps[1:]):
            self.assertEqual(before.output_norms, after.input_norms)

    def test_half_step_from_wide_ring(self):
        step = extend_half(ring_function(x1, 0.75), Ring(UNIT, 0.75), LEBESGUE)
        self.assertTrue(step.output_mask.all())
        self.assertTrue(np.isfinite(step.grid.values).all())


class MeasureConstantsTests(SimpleTestCase):
    def test_lebesgue_constants(self):
        constants = measure_constants(
            LEBESGUE, alphas=(0.2,), scales=(1.0,), resolution=64, half_alphas=(0.5,)
        )
        self.assertGreaterEqual(constants.C1, 2.0)
        self.assertGreaterEqual(constants.c1, 1.0)
        self.assertGreater(constants.C0, 0)
        self.assertEqual(len(constants.samples), 2 * len(default_suite()))
        data = json.loads(render(constants.to_dict()))
        self.assertEqual(data['suite_version'], '1')

    def test_one_step_ratios_are_uniform(self):
        constants = measure_constants(
            LEBESGUE, alphas=(0.4, 0.2, 0.1), scales=(1.0, 0.5), resolution=128, half_alphas=(0.5,)
        )
        worst = {}
        for sample in constants.samples:
            if sample['step'] != 'once':
                continue
            ratios = [r for r in (sample['ratio_lp'], sample['ratio_grad']) if r is not None]
            key = (sample['alpha'], sample['scale'])
            worst[key] = max(worst.get(key, 0.0), *ratios)
        self.assertEqual(len(worst), 6)
        self.assertLess(max(worst.values()) / min(worst.values()), 2.0)

    def test_empty_suite(self):
        with self.assertRaises(ValidationError):
            measure_constants(LEBESGUE, test_suite=[])

    def test_suite_names(self):
        names = [name for name, _ in default_suite()]
        self.assertEqual(names, ['constant', 'x1', 'x2', 'radial_0.5', 'radial_1', 'x1x2', 'trig'])
