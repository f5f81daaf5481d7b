import io
import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from removability.geometry import Cube
from removability.grid import (
    GridFunction,
    avg_difference_check,
    average,
    cell_centers,
    convolution_rates,
    discrete_convolution,
    hat_partition,
    norm_report,
    poincare_ratio,
    pp_poincare_ratio,
    read_csv,
    weighted_lp,
    write_csv,
)
from removability.weights import ConstantWeight, PowerWeight

LEBESGUE = ConstantWeight()
UNIT = Cube((0.0, 0.0), 1.0)


def smooth(points):
    return np.sin(2 * points[..., 0]) + np.cos(3 * points[..., 1]) + points[..., 0] * points[..., 1]


class GridFunctionTests(SimpleTestCase):
    def test_rejects_non_square_values(self):
        with self.assertRaises(ValidationError):
            GridFunction(UNIT, np.zeros((4, 5)))

    def test_rejects_nan_on_defined_cells(self):
        values = np.zeros((4, 4))
        values[0, 0] = np.nan
        with self.assertRaises(ValidationError):
            GridFunction(UNIT, values)
        mask = np.ones((4, 4), dtype=bool)
        mask[0, 0] = False
        self.assertFalse(GridFunction(UNIT, values, mask).defined[0, 0])

    def test_linear_gradient(self):
        u = GridFunction.sample(lambda x: 3 * x[..., 0] - x[..., 1], UNIT, 32)
        gx, gy = u.gradient()
        self.assertTrue(np.allclose(gx, 3.0))
        self.assertTrue(np.allclose(gy, -1.0))

    def test_quadratic_gradient_is_exact(self):
        for n in (16, 32, 64):
            u = GridFunction.sample(lambda x: x[..., 0] ** 2 + 3 * x[..., 0] * x[..., 1] - x[..., 1] ** 2, UNIT, n)
            X, Y = cell_centers(UNIT, n)
            gx, gy = u.gradient()
            self.assertLess(np.abs(gx - (2 * X + 3 * Y)).max(), 1e-9, n)
            self.assertLess(np.abs(gy - (3 * X - 2 * Y)).max(), 1e-9, n)

    def test_gradient_is_second_order(self):
        errors = []
        for n in (16, 32, 64):
            X, Y = cell_centers(UNIT, n)
            gx, gy = GridFunction.sample(smooth, UNIT, n).gradient()
            errors.append(max(
                np.abs(gx - (2 * np.cos(2 * X) + Y)).max(),
                np.abs(gy - (-3 * np.sin(3 * Y) + X)).max(),
            ))
        for coarse, fine in zip(errors, errors[1:]):
            self.assertGreater(math.log2(coarse / fine), 1.8, errors)

    def test_masked_gradient_stays_on_defined_cells(self):
        mask = np.zeros((16, 16), dtype=bool)
        mask[:, :8] = True
        u = GridFunction.sample(lambda x: x[..., 1], UNIT, 16, mask=mask)
        gx, gy = u.gradient()
        self.assertTrue(np.allclose(gy[mask], 1.0))
        self.assertTrue(np.all(gy[~mask] == 0))

    def test_csv_keeps_undefined_cells(self):
        mask = np.ones((8, 8), dtype=bool)
        mask[3:5, 3:5] = False
        u = GridFunction.sample(smooth, Cube((0.5, -0.25), 2.0), 8, mask=mask)
        handle = io.StringIO()
        write_csv(u, handle)
        handle.seek(0)
        back = read_csv(handle)
        self.assertEqual(back.box, u.box)
        self.assertTrue(np.array_equal(back.defined, mask))
        self.assertTrue(np.array_equal(back.values[mask], u.values[mask]))


class NormTests(SimpleTestCase):
    def test_lebesgue_norms_of_linear_function(self):
        u = GridFunction.sample(lambda x: x[..., 0], UNIT, 64)
        report = norm_report(u, LEBESGUE, 2)
        self.assertAlmostEqual(report.lp_u, math.sqrt(1 / 12), places=4)
        self.assertAlmostEqual(report.lp_grad, 1.0)
        self.assertAlmostEqual(report.sobolev, report.lp_u + report.lp_grad)

    def test_region_restricts_integral(self):
        u = GridFunction.sample(lambda x: np.ones(x.shape[:-1]), Cube((0, 0), 2.0), 32)
        self.assertAlmostEqual(weighted_lp(u, LEBESGUE, 1, region=UNIT), 1.0)
        self.assertAlmostEqual(weighted_lp(u, LEBESGUE, 1), 4.0)

    def test_average_reproduces_constants(self):
        u = GridFunction.sample(lambda x: np.full(x.shape[:-1], 0.1), Cube((0, 0), 2.0), 32)
        self.assertEqual(average(u, PowerWeight(-1.0), Cube((0.5, 0.5), 1.0)), 0.1)


class PoincareTests(SimpleTestCase):
    def test_linear_witness(self):
        u = GridFunction.sample(lambda x: x[..., 0], UNIT, 256)
        witness = poincare_ratio(u, LEBESGUE, UNIT, 1)
        self.assertLess(abs(witness.ratio - 1 / (4 * math.sqrt(2))), 1e-3)
        self.assertFalse(witness.is_constant)

    def test_constant_function(self):
        u = GridFunction.sample(lambda x: np.full(x.shape[:-1], 2.0), UNIT, 16)
        witness = pp_poincare_ratio(u, LEBESGUE, UNIT, 2)
        self.assertTrue(witness.is_constant)
        self.assertIsNone(witness.ratio)

    def test_average_difference(self):
        u = GridFunction.sample(smooth, UNIT, 64)
        check = avg_difference_check(u, LEBESGUE, Cube((0, 0), 0.5), UNIT, 2, kappa=2.5)
        self.assertGreater(check.rhs, 0)
        self.assertLess(check.ratio, 1.0)

    def test_average_difference_needs_nesting(self):
        u = GridFunction.sample(smooth, UNIT, 16)
        with self.assertRaises(ValidationError):
            avg_difference_check(u, LEBESGUE, Cube((0.4, 0), 0.5), UNIT, 2, kappa=2.5)


class ConvolutionTests(SimpleTestCase):
    def setUp(self):
        # (1 + 1/2)Q with Q the unit cube, 256 cells across Q
        self.u = GridFunction.sample(smooth, Cube((0, 0), 1.5), 384)

    def test_hats_partition_unity(self):
        xs = np.linspace(0.0, 1.0, 101)
        phi, _ = hat_partition(xs, 0.0, 1.0, 8)
        self.assertTrue(np.allclose(phi.sum(axis=1), 1.0))

    def test_constants_are_preserved(self):
        u = GridFunction.sample(lambda x: np.full(x.shape[:-1], -1.25), Cube((0, 0), 1.5), 96)
        ur = discrete_convolution(u, LEBESGUE, 8)
        self.assertTrue(np.all(ur.values == -1.25))
        gx, gy = ur.gradient()
        self.assertTrue(np.allclose(gx, 0.0, atol=1e-10))
        self.assertTrue(np.allclose(gy, 0.0, atol=1e-10))

    def test_first_order_error(self):
        rates = convolution_rates(self.u, LEBESGUE, (8, 16, 32))
        for ratio in rates['error_ratios'].values():
            self.assertTrue(1.6 <= ratio <= 2.4, ratio)

    def test_gradient_factor_is_stable(self):
        rows = convolution_rates(self.u, LEBESGUE, (8, 16, 32))['rows']
        factors = [row['grad_factor'] for row in rows]
        self.assertLess((max(factors) - min(factors)) / min(factors), 0.25)

    def test_epsilon_too_small(self):
        with self.assertRaises(ValidationError):
            discrete_convolution(self.u, LEBESGUE, 2, epsilon=0.1)
