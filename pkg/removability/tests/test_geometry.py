import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from removability.error_handlers import GeometryResourceError
from removability.geometry import (
    Box,
    Cube,
    Ring,
    double_ring,
    double_ring_region,
    inner_shell,
    subdivide_ring,
    subdivision_factor,
)

UNIT = Cube((0.0, 0.0), 1.0)


class CubeTests(SimpleTestCase):
    def test_scaling_keeps_center(self):
        cube = Cube((0.3, -0.2), 2.0)
        scaled = cube.scaled(0.5)
        self.assertEqual(scaled.center, cube.center)
        self.assertEqual(scaled.side, 1.0)

    def test_euclidean_diameter(self):
        self.assertAlmostEqual(Cube((0, 0), 3.0).diam, 3 * math.sqrt(2))

    def test_membership_is_strict(self):
        self.assertTrue(UNIT.contains([0.49, 0.0])[0])
        self.assertFalse(UNIT.contains([0.5, 0.0])[0])

    def test_rejects_nonpositive_side(self):
        with self.assertRaises(ValidationError):
            Cube((0, 0), 0.0)


class BoxTests(SimpleTestCase):
    def test_hull_dilate_and_intersect(self):
        hull = Box.hull(Cube((0, 0), 1.0), Cube((2, 0), 1.0))
        self.assertEqual(hull.lo, (-0.5, -0.5))
        self.assertEqual(hull.hi, (2.5, 0.5))
        self.assertAlmostEqual(hull.dilated(2.0).volume, 12.0)
        cut = hull.intersect(Box((0.0, 0.0), (1.0, 1.0)))
        self.assertAlmostEqual(cut.volume, 0.5)
        self.assertTrue(hull.contains_box(Cube((1, 0), 1.0).as_box()))
        self.assertTrue(Box((0, 0), (0, 1)).is_empty())


class RingTests(SimpleTestCase):
    def test_double_ring(self):
        ring = double_ring(Ring(UNIT, 0.2))
        self.assertEqual(ring.cube, UNIT)
        self.assertAlmostEqual(ring.alpha, 0.4)
        self.assertAlmostEqual(double_ring(Ring(UNIT, 0.49)).alpha, 0.98)

    def test_double_ring_rejects_half(self):
        with self.assertRaises(ValidationError):
            double_ring(Ring(UNIT, 0.5))

    def test_inner_shell(self):
        shell = inner_shell(Ring(UNIT, 0.2))
        self.assertAlmostEqual(shell.inner, 0.3)
        self.assertAlmostEqual(shell.outer, 0.4)
        self.assertTrue(shell.contains([0.35, 0.0])[0])
        wide = inner_shell(Ring(Cube((0, 0), 2.0), 0.25))
        self.assertAlmostEqual(wide.inner, 0.5)
        self.assertAlmostEqual(wide.outer, 0.75)

    def test_double_ring_region(self):
        region = double_ring_region(Ring(UNIT, 0.2))
        self.assertAlmostEqual(region.inner, 0.3)
        self.assertEqual(region.outer, 0.5)
        self.assertAlmostEqual(region.area, double_ring(Ring(UNIT, 0.2)).area)
        self.assertEqual(double_ring_region(Ring(UNIT, 0.75)).inner, 0.0)

    def test_shell_and_ring_are_disjoint(self):
        ring = Ring(UNIT, 0.2)
        points = np.random.default_rng(1).uniform(-0.5, 0.5, size=(2000, 2))
        both = inner_shell(ring).contains(points) & ring.contains(points)
        self.assertFalse(both.any())

    def test_area_identity(self):
        for alpha in (0.1, 0.25, 0.5, 0.9):
            ring = Ring(Cube((1.0, 2.0), 3.0), alpha)
            self.assertAlmostEqual(ring.area + ring.inner_cube().volume, 9.0, places=12)

    def test_length_and_width(self):
        ring = Ring(Cube((0, 0), 2.0), 0.25)
        self.assertAlmostEqual(ring.length, 0.5)
        self.assertAlmostEqual(ring.width, 0.25)
        self.assertAlmostEqual(ring.interface, 0.75)


class SubdivideRingTests(SimpleTestCase):
    def _check_tiling(self, ring, cubes):
        total = sum(c.volume for c in cubes)
        self.assertAlmostEqual(total, ring.area, places=12)
        for c in cubes:
            self.assertTrue(ring.region().contains_box(c))

    def test_half_ring(self):
        ring = Ring(UNIT, 0.5)
        cubes = subdivide_ring(ring)
        self.assertEqual(len(cubes), 12)
        self.assertAlmostEqual(cubes[0].side, 0.25)
        self._check_tiling(ring, cubes)

    def test_quarter_ring(self):
        ring = Ring(UNIT, 0.25)
        cubes = subdivide_ring(ring)
        self.assertEqual(len(cubes), 28)
        self.assertAlmostEqual(cubes[0].side, 0.125)
        self._check_tiling(ring, cubes)

    def test_halving_alpha_roughly_doubles_count(self):
        coarse = len(subdivide_ring(Ring(UNIT, 0.25)))
        fine = len(subdivide_ring(Ring(UNIT, 0.125)))
        self.assertTrue(1.8 < fine / coarse < 2.4)

    def test_snaps_side_down(self):
        k, _ = subdivision_factor(0.3)
        cubes = subdivide_ring(Ring(UNIT, 0.3))
        self.assertAlmostEqual(cubes[0].side, 0.3 / (2 * k))
        self._check_tiling(Ring(UNIT, 0.3), cubes)

    def test_cube_cap(self):
        with self.assertRaises(GeometryResourceError):
            subdivide_ring(Ring(UNIT, 0.01), cube_cap=100)
