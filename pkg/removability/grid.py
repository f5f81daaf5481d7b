"""
Functions sampled at the cell centers of a uniform grid on a square.

Values are indexed ``values[i, j]`` with ``i`` along x_1 and ``j`` along x_2
(``numpy.meshgrid(..., indexing='ij')``). Region integrals snap the region to
whole grid cells and integrate against per-cell weighted masses from
``weights.cell_masses``.
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .error_handlers import DegenerateWeightError
from .geometry import Box, Cube
from .validators import validate_exponent, validate_min_count, validate_positive
from .weights import cell_masses

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    Cell-center samples of a function on the square ``box``.

    ``mask`` marks the cells where the function is defined; None means all of
    them. ``analytic_gradient`` optionally carries exact partial derivatives
    at the cell centers, which ``gradient`` then returns instead of finite
    differences.
    """

    box: Cube
    values: np.ndarray
    mask: np.ndarray | None = None
    analytic_gradient: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError(_('Grid values must be a square array.'), code='bad_grid_shape')
        validate_min_count(values.shape[0], 2, 'Grid resolution')
        mask = None if self.mask is None else np.asarray(self.mask, dtype=bool)
        if mask is not None and mask.shape != values.shape:
            raise ValidationError(_('Grid mask shape does not match values.'), code='bad_mask_shape')
        defined = values if mask is None else values[mask]
        if not np.all(np.isfinite(defined)):
            raise ValidationError(_('Grid values must be finite.'), code='not_finite')
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'mask', mask)

    @classmethod
    def sample(cls, func, box, resolution, mask=None):
        """Sample ``func`` (points of shape (..., 2) -> values) at the cell centers."""
        X, Y = cell_centers(box, resolution)
        values = np.asarray(func(np.stack([X, Y], axis=-1)), dtype=float)
        if mask is not None:
            values = np.where(mask, values, np.nan)
        return cls(box, np.broadcast_to(values, X.shape).copy(), mask)

    @property
    def resolution(self):
        return self.values.shape[0]

    @property
    def spacing(self):
        return self.box.side / self.resolution

    @property
    def defined(self):
        if self.mask is None:
            return np.ones(self.values.shape, dtype=bool)
        return self.mask

    def centers(self):
        return cell_centers(self.box, self.resolution)

    def with_values(self, values, mask=None):
        return GridFunction(self.box, values, self.mask if mask is None else mask)

    def gradient(self):
        """Partial derivatives (d/dx_1, d/dx_2) at the cell centers."""
        if self.analytic_gradient is not None:
            return self.analytic_gradient
        h = self.spacing
        if self.mask is None:
            edge = 2 if self.resolution >= 3 else 1
            return tuple(np.gradient(self.values, h, edge_order=edge))
        return tuple(_masked_difference(self.values, self.mask, h, axis) for axis in (0, 1))

    def gradient_norm(self):
        gx, gy = self.gradient()
        return np.hypot(gx, gy)

    def restrict(self, region):
        """The grid function on the cells of ``region`` (snapped to a square block)."""
        rows, cols, snapped = snap_region(self, region)
        if rows.stop - rows.start != cols.stop - cols.start:
            raise ValidationError(_('Restriction region must snap to a square block.'), code='not_square')
        cube = Cube(snapped.center, float(snapped.widths[0]))
        mask = None if self.mask is None else self.mask[rows, cols]
        grad = None
        if self.analytic_gradient is not None:
            grad = tuple(g[rows, cols] for g in self.analytic_gradient)
        return GridFunction(cube, self.values[rows, cols], mask, grad)


@dataclass(frozen=True)
class NormReport:
    lp_u: float
    lp_grad: float
    p: float

    @property
    def sobolev(self):
        """||u||_{1,p} = ||u||_p + ||grad u||_p."""
        return self.lp_u + self.lp_grad

    def to_dict(self):
        return {'lp_u': self.lp_u, 'lp_grad': self.lp_grad, 'p': self.p}


@dataclass(frozen=True)
class PoincareWitness:
    """Lower witness for a Poincare constant; ``ratio`` is None for constant functions."""

    lhs: float
    rhs: float
    ratio: float | None
    is_constant: bool

    def to_dict(self):
        return {'lhs': self.lhs, 'rhs': self.rhs, 'ratio': self.ratio, 'constant_function': self.is_constant}


@dataclass(frozen=True)
class AverageDifference:
    lhs: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs if self.rhs > 0 else None


def cell_centers(box, resolution):
    lo, _ = box.bounds()
    h = box.side / resolution
    axes = [lo[i] + (np.arange(resolution) + 0.5) * h for i in range(2)]
    return np.meshgrid(*axes, indexing='ij')


def _masked_difference(values, mask, h, axis):
    """Central differences where both neighbours are defined, one-sided otherwise."""
    v = np.where(mask, values, 0.0)
    forward_ok = np.zeros_like(mask)
    backward_ok = np.zeros_like(mask)
    forward = np.zeros_like(v)
    backward = np.zeros_like(v)
    lead = [slice(None)] * 2
    trail = [slice(None)] * 2
    lead[axis] = slice(None, -1)
    trail[axis] = slice(1, None)
    lead, trail = tuple(lead), tuple(trail)
    step = (v[trail] - v[lead]) / h
    pair = mask[lead] & mask[trail]
    forward[lead] = step
    forward_ok[lead] = pair
    backward[trail] = step
    backward_ok[trail] = pair
    out = np.where(
        forward_ok & backward_ok,
        (forward + backward) / 2,
        np.where(forward_ok, forward, np.where(backward_ok, backward, 0.0)),
    )
    return np.where(mask, out, 0.0)


def snap_region(u, region, tol=1e-9):
    """
    Snap a cube or box to whole grid cells.

    Returns:
        tuple: (row slice, column slice, snapped Box)

    Raises:
        ValidationError: If the region leaves the grid or snaps to no cells
    """
    lo, hi = region.bounds()
    glo, _ghi = u.box.bounds()
    h = u.spacing
    start = np.rint((np.asarray(lo) - glo) / h).astype(int)
    stop = np.rint((np.asarray(hi) - glo) / h).astype(int)
    outside = (np.asarray(lo) < glo - tol * u.box.side) | (
        np.asarray(hi) > glo + u.box.side * (1 + tol)
    )
    if np.any(outside):
        raise ValidationError(_('Region lies outside the grid.'), code='region_outside_grid')
    start = np.clip(start, 0, u.resolution)
    stop = np.clip(stop, 0, u.resolution)
    if np.any(stop <= start):
        raise ValidationError(_('Region is smaller than one grid cell.'), code='region_too_small')
    snapped = Box(tuple(glo + start * h), tuple(glo + stop * h))
    return slice(start[0], stop[0]), slice(start[1], stop[1]), snapped


def masses_for(u, w):
    """Per-cell weighted masses of u's grid."""
    return cell_masses(w, u.box, u.resolution)


def _region_cells(u, w, region, mask=None):
    masses = masses_for(u, w)
    keep = u.defined if mask is None else (mask & u.defined)
    if region is not None:
        rows, cols, _ = snap_region(u, region)
        inside = np.zeros_like(keep)
        inside[rows, cols] = True
        keep = keep & inside
    return masses, keep


def lp_sum(values, masses, p):
    """(sum |v|^p m)^(1/p) over the given cells."""
    return math.fsum(np.ravel(np.abs(values) ** p * masses)) ** (1 / p)


def weighted_lp(u, w, p, region=None, mask=None, values=None):
    """
    Riemann-sum weighted L^p norm (integral |u|^p dmu)^(1/p).

    Args:
        u: GridFunction
        w: Weight defining mu
        p: Exponent, p >= 1
        region: Optional cube or box restricting the integral (snapped to cells)
        mask: Optional boolean cell mask restricting the integral
        values: Array to integrate instead of ``u.values`` (same grid)
    """
    validate_exponent(p)
    masses, keep = _region_cells(u, w, region, mask)
    v = u.values if values is None else values
    return lp_sum(v[keep], masses[keep], p)


def norm_report(u, w, p, region=None, mask=None):
    """Weighted L^p norms of u and |grad u| on the defined cells."""
    lp_u = weighted_lp(u, w, p, region=region, mask=mask)
    lp_grad = weighted_lp(u, w, p, region=region, mask=mask, values=u.gradient_norm())
    return NormReport(lp_u, lp_grad, p)


def _weighted_mean(values, masses):
    total = math.fsum(masses)
    if total <= 0:
        return None
    ref = float(values[0])
    return ref + math.fsum(masses * (values - ref)) / total


def average(u, w, region, values=None, mask=None):
    """
    Weighted mean of u over ``region`` (snapped to whole cells).

    Constants are reproduced exactly.

    Raises:
        ValidationError: If the region leaves the grid
        DegenerateWeightError: If the region has zero mass
    """
    masses, keep = _region_cells(u, w, region, mask)
    v = u.values if values is None else values
    mean = _weighted_mean(v[keep], masses[keep])
    if mean is None:
        raise DegenerateWeightError(f"region {region.to_dict()} has zero mass for {w.name}", region)
    return mean


def _mean_power(values, masses, p):
    return math.fsum(np.abs(values) ** p * masses) / math.fsum(masses)


def _poincare(u, w, Q, p, lhs_power):
    validate_exponent(p)
    masses, keep = _region_cells(u, w, Q)
    v = u.values[keep]
    m = masses[keep]
    if math.fsum(m) <= 0:
        raise DegenerateWeightError(f"cube {Q.to_dict()} has zero mass for {w.name}", Q)
    mean = _weighted_mean(v, m)
    lhs = _mean_power(v - mean, m, lhs_power) ** (1 / lhs_power)
    grad = u.gradient_norm()[keep]
    rhs = Q.diam * _mean_power(grad, m, p) ** (1 / p)
    if rhs <= 1e-14 * max(1.0, float(np.max(np.abs(v)))):
        return PoincareWitness(lhs, rhs, None, True)
    return PoincareWitness(lhs, rhs, lhs / rhs, False)


def poincare_ratio(u, w, Q, p):
    """
    Empirical witness for the (1,p)-Poincare inequality on the cube Q.

    Returns the ratio of mean |u - u_Q| over diam(Q) (mean |grad u|^p)^(1/p).
    A constant function gives a witness with ``is_constant`` set.
    """
    return _poincare(u, w, Q, p, 1)


def pp_poincare_ratio(u, w, Q, p):
    """The (p,p) variant: (mean |u - u_Q|^p)^(1/p) on the left-hand side."""
    return _poincare(u, w, Q, p, p)


def avg_difference_check(u, w, Q1, Q0, p, kappa):
    """
    Both sides of |u_{Q1} - u_{Q0}| <= C diam(Q0) (mean_{Q0} |grad u|^p)^(1/p).

    Raises:
        ValidationError: If the nesting Q1 in Q0 in kappa*Q1 fails
    """
    validate_exponent(p)
    if not (Q0.contains_cube(Q1) and Q1.scaled(kappa).contains_cube(Q0)):
        raise ValidationError(
            _('Cubes must be nested as Q1 in Q0 in %(kappa)s*Q1.'),
            code='bad_nesting',
            params={'kappa': kappa},
        )
    lhs = abs(average(u, w, Q1) - average(u, w, Q0))
    masses, keep = _region_cells(u, w, Q0)
    grad = u.gradient_norm()[keep]
    rhs = Q0.diam * _mean_power(grad, masses[keep], p) ** (1 / p)
    return AverageDifference(lhs, rhs)


# ---------------------------------------------------------------------------
# Discrete convolution by a partition of unity
# ---------------------------------------------------------------------------

def hat(s):
    """C^1 profile: 1 on [0, 1/2], smoothstep down to 0 on [1/2, 3/2]."""
    t = np.clip(np.abs(s) - 0.5, 0.0, 1.0)
    return 1 - t * t * (3 - 2 * t)


def hat_derivative(s):
    """d hat / ds."""
    t = np.clip(np.abs(s) - 0.5, 0.0, 1.0)
    return -6 * t * (1 - t) * np.sign(s)


def hat_partition(coords, lo, side, r):
    """
    Shepard-normalised hats of the r intervals of [lo, lo + side].

    Returns:
        tuple: (phi, dphi) of shape (len(coords), r); rows of phi sum to 1
    """
    width = side / r
    centers = lo + (np.arange(r) + 0.5) * width
    s = (np.asarray(coords)[:, None] - centers[None, :]) / (width / 2)
    raw = hat(s)
    draw = hat_derivative(s) / (width / 2)
    total = raw.sum(axis=1, keepdims=True)
    dtotal = draw.sum(axis=1, keepdims=True)
    phi = raw / total
    dphi = (draw * total - raw * dtotal) / total ** 2
    return phi, dphi


def convolution_cube(u, epsilon=None):
    """The cube Q with (1 + epsilon)Q = u.box."""
    epsilon = validate_positive(resolve(epsilon, 'CONVOLUTION_EPSILON'))
    return u.box.scaled(1 / (1 + epsilon)), epsilon


def discrete_convolution(u, w, r, epsilon=None):
    """
    Smooth u on Q by sum_k u_{Q_k} phi_k over the r x r subcubes Q_k of Q.

    u must live on (1 + epsilon)Q. The bumps are tensor products of
    Shepard-normalised hats with supp phi_k in (3/2)Q_k; the partition
    factorises per axis, so sum_k phi_k = 1 on Q up to rounding.

    Returns:
        GridFunction: u_r on the cells of Q, with its exact gradient attached

    Raises:
        ValidationError: If r < 1 or (3/2)Q_k would leave u's domain
    """
    r = validate_min_count(r, 1, 'Subdivision count r')
    Q, epsilon = convolution_cube(u, epsilon)
    if epsilon < 1 / (2 * r) - 1e-12:
        raise ValidationError(
            _('Bump supports leave the grid; use epsilon >= %(need)s for r=%(r)s.'),
            code='epsilon_too_small',
            params={'need': 1 / (2 * r), 'r': r},
        )
    inner = u.restrict(Q)
    lo, _hi = Q.bounds()
    X, Y = inner.centers()
    xs, ys = X[:, 0], Y[0, :]

    masses = masses_for(inner, w)
    width = Q.side / r
    kx = np.clip(((xs - lo[0]) // width).astype(int), 0, r - 1)
    ky = np.clip(((ys - lo[1]) // width).astype(int), 0, r - 1)
    labels = (kx[:, None] * r + ky[None, :]).ravel()
    v = inner.values.ravel()
    m = masses.ravel()
    ref = float(v[0])
    mass = np.bincount(labels, weights=m, minlength=r * r)
    moment = np.bincount(labels, weights=m * (v - ref), minlength=r * r)
    if np.any(mass <= 0):
        raise DegenerateWeightError(f"a subcube of Q has zero mass for {w.name}", Q)
    coeffs = (ref + moment / mass).reshape(r, r)

    phix, dphix = hat_partition(xs, lo[0], Q.side, r)
    phiy, dphiy = hat_partition(ys, lo[1], Q.side, r)
    smooth = ref + phix @ (coeffs - ref) @ phiy.T
    grad = (dphix @ coeffs @ phiy.T, phix @ coeffs @ dphiy.T)
    logger.debug(f"Discrete convolution r={r} on {inner.resolution}^2 cells")
    return GridFunction(inner.box, smooth, None, grad)


def convolution_rates(u, w, rs, p=2, epsilon=None):
    """
    Approximation errors ||u_r - u||_p and gradient factors K(r) on Q.

    Returns:
        dict: ``rows`` with r, error and K(r); ``error_ratios`` error(r)/error(2r)
        for every r whose double is also in ``rs``
    """
    Q, epsilon = convolution_cube(u, epsilon)
    inner = u.restrict(Q)
    grad_u = weighted_lp(inner, w, p, values=u.gradient_norm()[_slices(u, Q)])
    rows = {}
    for r in rs:
        ur = discrete_convolution(u, w, r, epsilon)
        error = weighted_lp(ur, w, p, values=ur.values - inner.values)
        k = weighted_lp(ur, w, p, values=ur.gradient_norm()) / grad_u if grad_u > 0 else None
        rows[r] = {'r': r, 'error': error, 'grad_factor': k}
    ratios = {
        r: rows[r]['error'] / rows[2 * r]['error']
        for r in rs
        if 2 * r in rows and rows[2 * r]['error'] > 0
    }
    return {'rows': [rows[r] for r in rs], 'error_ratios': ratios}


def _slices(u, region):
    rows, cols, _ = snap_region(u, region)
    return rows, cols


# ---------------------------------------------------------------------------
# CSV exchange
# ---------------------------------------------------------------------------

CSV_HEADER = ['N', 'center_x', 'center_y', 'side']


def write_csv(u, path_or_file):
    """Write the header row, the grid description and N rows of values (row i = x_1 index)."""
    def _write(handle):
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        writer.writerow([u.resolution, repr(u.box.center[0]), repr(u.box.center[1]), repr(u.box.side)])
        for row in u.values:
            writer.writerow([repr(float(v)) for v in row])

    if hasattr(path_or_file, 'write'):
        _write(path_or_file)
    else:
        with open(path_or_file, 'w', newline='') as handle:
            _write(handle)


def read_csv(path_or_file):
    """Inverse of ``write_csv``; NaN cells become undefined (masked out)."""
    def _read(handle):
        reader = csv.reader(handle)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValidationError(_('Unexpected grid CSV header.'), code='bad_csv_header')
        n, cx, cy, side = next(reader)
        values = np.array([[float(v) for v in row] for row in reader])
        if values.shape != (int(n), int(n)):
            raise ValidationError(_('Grid CSV has the wrong number of values.'), code='bad_csv_shape')
        mask = np.isfinite(values)
        return GridFunction(Cube((float(cx), float(cy)), float(side)), values, None if mask.all() else mask)

    if hasattr(path_or_file, 'read'):
        return _read(path_or_file)
    with open(path_or_file, newline='') as handle:
        return _read(handle)
