"""
Axis-aligned cubes, rings and the regions derived from them.

A ring of relative thickness alpha in the cube Q (center c, side l) is

    R = {x : (1 - alpha) l/2 < max_i |x_i - c_i| < l/2},

so its width in the max-norm is alpha*l/2 and its length is l(R) = alpha*l.
Cubes are open; membership tests are strict and measures ignore boundaries.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .error_handlers import GeometryResourceError
from .validators import validate_below_half, validate_open_unit, validate_positive

logger = logging.getLogger(__name__)


def _as_points(points, n):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, n)
    return pts


@dataclass(frozen=True)
class Cube:
    """Open axis-aligned cube with the given center and side length."""

    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, 'center', tuple(float(c) for c in self.center))
        object.__setattr__(self, 'side', float(self.side))
        validate_positive(self.side)

    @property
    def n(self):
        return len(self.center)

    @property
    def half(self):
        return self.side / 2

    @property
    def diam(self):
        """Euclidean diameter, l * sqrt(n)."""
        return self.side * math.sqrt(self.n)

    @property
    def volume(self):
        return self.side ** self.n

    def bounds(self):
        c = np.asarray(self.center)
        return c - self.half, c + self.half

    def scaled(self, factor):
        """The concentric cube factor*Q."""
        return Cube(self.center, self.side * factor)

    def as_box(self):
        lo, hi = self.bounds()
        return Box(tuple(lo), tuple(hi))

    def contains(self, points):
        pts = _as_points(points, self.n)
        return np.max(np.abs(pts - np.asarray(self.center)), axis=1) < self.half

    def contains_cube(self, other, tol=1e-12):
        """True when the closure of ``other`` lies in the closure of this cube."""
        lo, hi = self.bounds()
        olo, ohi = other.bounds()
        return bool(np.all(olo >= lo - tol) and np.all(ohi <= hi + tol))

    def max_norm(self, points):
        """max_i |x_i - c_i| for each point."""
        pts = _as_points(points, self.n)
        return np.max(np.abs(pts - np.asarray(self.center)), axis=1)

    def to_dict(self):
        return {'center': list(self.center), 'side': self.side}


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle [lo, hi]; used for connectors and snapped regions."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, 'lo', tuple(float(v) for v in self.lo))
        object.__setattr__(self, 'hi', tuple(float(v) for v in self.hi))

    @classmethod
    def hull(cls, *cubes):
        """Smallest box containing the given cubes or boxes."""
        los = np.array([_bounds(c)[0] for c in cubes])
        his = np.array([_bounds(c)[1] for c in cubes])
        return cls(tuple(los.min(axis=0)), tuple(his.max(axis=0)))

    @property
    def n(self):
        return len(self.lo)

    @property
    def widths(self):
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def center(self):
        return tuple((np.asarray(self.lo) + np.asarray(self.hi)) / 2)

    @property
    def diam(self):
        return float(np.linalg.norm(self.widths))

    @property
    def volume(self):
        return float(np.prod(np.clip(self.widths, 0, None)))

    def is_empty(self):
        return bool(np.any(self.widths <= 0))

    def bounds(self):
        return np.asarray(self.lo), np.asarray(self.hi)

    def dilated(self, factor):
        """Concentric box with every width multiplied by ``factor``."""
        c = np.asarray(self.center)
        half = self.widths * factor / 2
        return Box(tuple(c - half), tuple(c + half))

    def intersect(self, other):
        olo, ohi = _bounds(other)
        return Box(tuple(np.maximum(self.lo, olo)), tuple(np.minimum(self.hi, ohi)))

    def contains_box(self, other, tol=1e-12):
        olo, ohi = _bounds(other)
        return bool(np.all(olo >= np.asarray(self.lo) - tol) and np.all(ohi <= np.asarray(self.hi) + tol))

    def contains(self, points):
        pts = _as_points(points, self.n)
        return np.all((pts > np.asarray(self.lo)) & (pts < np.asarray(self.hi)), axis=1)

    def to_dict(self):
        return {'lo': list(self.lo), 'hi': list(self.hi)}


def _bounds(shape):
    lo, hi = shape.bounds()
    return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)


@dataclass(frozen=True)
class Shell:
    """Max-norm annulus {inner < max_i |x_i - c_i| < outer} around ``center``."""

    center: tuple
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, 'center', tuple(float(c) for c in self.center))
        if not 0 <= self.inner < self.outer:
            raise ValidationError(
                _('Shell radii must satisfy 0 <= inner < outer, got %(i)s and %(o)s.'),
                code='bad_shell',
                params={'i': self.inner, 'o': self.outer},
            )

    @property
    def n(self):
        return len(self.center)

    @property
    def width(self):
        return self.outer - self.inner

    @property
    def area(self):
        return (2 * self.outer) ** self.n - (2 * self.inner) ** self.n

    def max_norm(self, points):
        pts = _as_points(points, self.n)
        return np.max(np.abs(pts - np.asarray(self.center)), axis=1)

    def contains(self, points):
        rho = self.max_norm(points)
        return (rho > self.inner) & (rho < self.outer)

    def contains_box(self, box, tol=1e-12):
        """True when the closed box lies in the closed shell."""
        lo, hi = _bounds(box)
        c = np.asarray(self.center)
        lo, hi = lo - c, hi - c
        far = np.max(np.maximum(np.abs(lo), np.abs(hi)))
        if far > self.outer + tol:
            return False
        # nearest point of the box to the center in the max-norm
        near = np.max(np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi))))
        return bool(near >= self.inner - tol)


@dataclass(frozen=True)
class Ring:
    """Boundary collar of relative thickness ``alpha`` in ``cube``."""

    cube: Cube
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, 'alpha', float(self.alpha))
        validate_open_unit(self.alpha)

    @property
    def length(self):
        """l(R) = alpha * l(Q)."""
        return self.alpha * self.cube.side

    @property
    def width(self):
        """Max-norm thickness alpha*l/2."""
        return self.alpha * self.cube.side / 2

    @property
    def interface(self):
        """Half-side (1 - alpha) l/2 of the inner boundary of the ring."""
        return (1 - self.alpha) * self.cube.side / 2

    def inner_cube(self):
        """The hole (1 - alpha)Q."""
        return self.cube.scaled(1 - self.alpha)

    def region(self):
        return Shell(self.cube.center, self.interface, self.cube.half)

    @property
    def area(self):
        return self.region().area

    def contains(self, points):
        return self.region().contains(points)

    def to_dict(self):
        return {'cube': self.cube.to_dict(), 'alpha': self.alpha}


def double_ring(ring):
    """
    Return the ring 2R of the same cube with twice the thickness.

    Raises:
        ValidationError: If alpha >= 1/2; the caller must use the final half-step
    """
    validate_below_half(ring.alpha)
    return Ring(ring.cube, 2 * ring.alpha)


def inner_shell(ring):
    """
    Return R' = {(1 - 2 alpha) l/2 < max|x_i - c_i| < (1 - alpha) l/2}.

    R' and R are disjoint and their closures make up the closure of 2R.
    """
    validate_below_half(ring.alpha)
    half = ring.cube.half
    return Shell(ring.cube.center, (1 - 2 * ring.alpha) * half, (1 - ring.alpha) * half)


def double_ring_region(ring):
    """
    Region reached by one extension step from R.

    This is 2R for alpha < 1/2. For alpha >= 1/2 the final step fills the
    hole, and the region is the cube minus its center.
    """
    half = ring.cube.half
    return Shell(ring.cube.center, max(0.0, (1 - 2 * ring.alpha) * half), half)


def subdivision_factor(alpha, max_denominator=10 ** 6):
    """
    Smallest k such that cubes of side alpha*l/(2k) tile the ring exactly.

    The tiling is exact when l divided by the subcube side, 2k/alpha, is an
    integer. alpha is read as the nearest fraction with a bounded denominator.
    """
    frac = Fraction(alpha).limit_denominator(max_denominator)
    if abs(float(frac) - alpha) > 1e-12 * max(1.0, alpha):
        return None, frac
    # 2k/alpha = 2k*b/a is an integer iff a divides 2k*b
    k = frac.numerator // math.gcd(2 * frac.denominator, frac.numerator)
    return max(k, 1), frac


def subdivide_ring(ring, cube_cap=None):
    """
    Decompose the ring into congruent cubes of side l(R)/2 (snapped down).

    The subcube side is alpha*l/(2k) for the smallest integer k making the
    tiling exact. The returned cubes cover R up to a null set and have
    pairwise disjoint interiors.

    Raises:
        GeometryResourceError: If the tiling needs more than ``cube_cap`` cubes
    """
    cube_cap = resolve(cube_cap, 'CUBE_CAP')
    k, frac = subdivision_factor(ring.alpha)
    n = ring.cube.n
    if k is None:
        raise GeometryResourceError(
            f"alpha={ring.alpha} has no exact tiling with a bounded subdivision factor",
            requested=math.inf,
            cap=cube_cap,
        )
    per_side = 2 * k * frac.denominator // frac.numerator
    count = per_side ** n - (per_side - 2 * k) ** n
    if count > cube_cap:
        raise GeometryResourceError(
            f"ring subdivision needs {count} cubes, above the cap of {cube_cap}",
            requested=count,
            cap=cube_cap,
        )

    side = ring.cube.side / per_side
    lo = np.asarray(ring.cube.center) - ring.cube.half
    cubes = []
    for index in itertools.product(range(per_side), repeat=n):
        if all(k <= i < per_side - k for i in index):
            continue
        center = lo + (np.asarray(index) + 0.5) * side
        cubes.append(Cube(tuple(center), side))
    logger.debug(f"Subdivided ring alpha={ring.alpha} into {len(cubes)} cubes of side {side:.6g}")
    return cubes
