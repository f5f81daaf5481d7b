"""
Whitney-type decomposition of the inner shell R' of a ring, reflected cubes
in R, connectors between neighbours and the bump partition of unity.

All geometry is computed in coordinates centred at the ring's cube. With
h the half-side of the interface (the inner boundary of R) and W the ring
width, the shell R' = {h - W < rho < h}, rho the max-norm, is cut into
square bands growing from its inner boundary towards the interface. Band i
starts at rho = b_i, has cubes of side t_i <= W 2^-(i+1) that tile it exactly,
and the next band starts at b_i + t_i. After the regular bands one final
band of cubes touching the interface closes the shell up to a thin strip.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from scipy.spatial import cKDTree

from .conf import resolve
from .error_handlers import ExtensionError, GeometryResourceError
from .geometry import Ring
from .performance import cache_result, log_runtime
from .validators import validate_at_least_half, validate_below_half

logger = logging.getLogger(__name__)

ZONE_FACE = 0
ZONE_CORNER = 1


@dataclass
class WhitneyDecomposition:
    """
    Cubes D_j of the shell (or of the hole, for the core variant) and the
    data attached to them by ``reflect`` and ``connectors``.

    Per-cube arrays share the index j; ``centers`` are global coordinates.
    """

    ring: Ring
    kappa: float
    core: bool
    interface: float
    width: float
    centers: np.ndarray
    sides: np.ndarray
    layers: np.ndarray
    distances: np.ndarray
    truncation: dict
    zones: np.ndarray | None = None
    reflected_centers: np.ndarray | None = None
    reflected_sides: np.ndarray | None = None
    reflect_flags: dict = field(default_factory=dict)
    pairs: np.ndarray | None = None
    connector_lo: np.ndarray | None = None
    connector_hi: np.ndarray | None = None
    connector_failed: np.ndarray | None = None

    @property
    def count(self):
        return len(self.sides)

    @property
    def origin(self):
        return np.asarray(self.ring.cube.center)

    @property
    def shell_inner(self):
        """Inner max-norm radius of the decomposed region."""
        return 0.0 if self.core else self.interface - self.width

    @property
    def shell_area(self):
        return (2 * self.interface) ** 2 - (2 * self.shell_inner) ** 2

    def local(self, points):
        return np.asarray(points, dtype=float) - self.origin

    def cube_bounds(self, scale=1.0):
        half = (scale * self.sides / 2)[:, None]
        return self.centers - half, self.centers + half

    def reflected_bounds(self):
        half = (self.reflected_sides / 2)[:, None]
        return self.reflected_centers - half, self.reflected_centers + half

    def summary(self):
        return {
            'cubes': self.count,
            'layers': int(self.layers.max()) + 1 if self.count else 0,
            'min_side': float(self.sides.min()),
            'max_side': float(self.sides.max()),
            'truncation': self.truncation,
            'reflect_flags': {k: int(v) for k, v in self.reflect_flags.items()},
            'connector_failures': int(self.connector_failed.sum()) if self.connector_failed is not None else None,
        }


def _band_layout(inner, interface, width, floor):
    """(half extent a, side t, cells per side n) of the regular bands and the final band."""
    bands = []
    b, d = inner, interface - inner
    i = 0
    while True:
        target = width * 2.0 ** (-i - 1)
        if target < floor:
            break
        if b <= 0:
            t, n = target, 2
        else:
            n = math.ceil(2 * b / target - 1e-9) + 2
            t = 2 * b / (n - 2)
        bands.append((b + t if b > 0 else t, t, n))
        b += t
        d -= t
        i += 1
    m = math.ceil(2 * interface / d - 1e-9)
    final_side = 2 * interface / m
    bands.append((interface, final_side, m))
    return bands, d, final_side


def _band_cubes(a, t, n):
    coords = -a + (np.arange(n) + 0.5) * t
    X, Y = np.meshgrid(coords, coords, indexing='ij')
    rho = np.maximum(np.abs(X), np.abs(Y))
    keep = rho > a - t + t / 4
    return np.stack([X[keep], Y[keep]], axis=1)


def _build(ring, core, kappa, i_cap, min_side, cube_cap):
    kappa = resolve(kappa, 'WHITNEY_KAPPA')
    i_cap = resolve(i_cap, 'WHITNEY_I_CAP')
    cube_cap = resolve(cube_cap, 'CUBE_CAP')
    if not kappa > 1:
        raise ValidationError(_('kappa must exceed 1.'), code='kappa_range')
    h = ring.interface
    width = h if core else ring.width
    inner = 0.0 if core else h - width
    floor = max(width * 2.0 ** -i_cap, min_side or 0.0)
    bands, last_gap, final_side = _band_layout(inner, h, width, floor)

    requested = sum(4 * (band[2] - 1) for band in bands)
    if requested > cube_cap:
        raise GeometryResourceError(
            f"Whitney decomposition needs {requested} cubes, above the cap of {cube_cap}",
            requested=requested,
            cap=cube_cap,
        )

    centers, sides, layers = [], [], []
    for i, (a, t, n) in enumerate(bands):
        band = _band_cubes(a, t, n)
        centers.append(band)
        sides.append(np.full(len(band), t))
        layers.append(np.full(len(band), i))
    local = np.concatenate(centers)
    sides = np.concatenate(sides)
    layers = np.concatenate(layers)
    rho = np.abs(local).max(axis=1)
    distances = np.maximum(h - rho - sides / 2, 0.0)

    strip = max(last_gap - final_side, 0.0)
    shell_area = (2 * h) ** 2 - (2 * inner) ** 2
    defect = shell_area - float(np.sum(sides ** 2))
    truncation = {
        'regular_layers': len(bands) - 1,
        'final_side': final_side,
        'strip_width': strip,
        'coverage_defect': defect,
        'strip_bound': 2.0 ** -i_cap * shell_area,
    }
    if strip > 0:
        logger.warning(
            f"Whitney truncation leaves a strip of width {strip:.3g} "
            f"(uncovered area {defect:.3g}) at the interface",
            extra={'alpha': ring.alpha, 'side': ring.cube.side},
        )
    return WhitneyDecomposition(
        ring=ring,
        kappa=kappa,
        core=core,
        interface=h,
        width=width,
        centers=local + np.asarray(ring.cube.center),
        sides=sides,
        layers=layers,
        distances=distances,
        truncation=truncation,
    )


def decompose(ring, kappa=None, i_cap=None, min_side=None, cube_cap=None):
    """
    Cubes D_j tiling the shell R' of a ring with alpha < 1/2.

    Layer 0 has cubes of side at most (alpha l/2)/2 and each layer halves
    the side; the regular layers stop when the side would drop below
    max(W 2^-i_cap, min_side).

    Raises:
        ValidationError: If alpha >= 1/2
        GeometryResourceError: If the cube count exceeds the cap
    """
    validate_below_half(ring.alpha)
    return _build(ring, False, kappa, i_cap, min_side, cube_cap)


def decompose_core(ring, kappa=None, i_cap=None, min_side=None, cube_cap=None):
    """Cubes covering the whole hole (1 - alpha)Q of a ring with alpha >= 1/2."""
    validate_at_least_half(ring.alpha)
    return _build(ring, True, kappa, i_cap, min_side, cube_cap)


def _shell_contains(lo, hi, inner, outer, tol):
    """Closed boxes (local coordinates) inside the closed max-norm shell."""
    far = np.maximum(np.abs(lo), np.abs(hi)).max(axis=1)
    near_axis = np.where((lo <= 0) & (hi >= 0), 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    near = near_axis.max(axis=1)
    return (far <= outer + tol) & (near >= inner - tol)


def reflect(dec):
    """
    Attach a reflected cube D_j* in the closed ring R to every D_j.

    Face cubes are mirrored in the interface plane; the corner cube of a band
    and its two neighbours go to the point reflection of the corner cube
    through the interface corner, at half the side. Cubes closer to the
    interface than half their side are pushed out so that
    dist(D_j, D_j*) >= side. A reflected cube that still leaves R is shrunk
    and recentred, and flagged.
    """
    h = dec.interface
    outer = dec.ring.cube.half
    tol = 1e-12 * outer
    local = dec.local(dec.centers)
    t = dec.sides
    ax, ay = np.abs(local[:, 0]), np.abs(local[:, 1])
    sx = np.where(local[:, 0] < 0, -1.0, 1.0)
    sy = np.where(local[:, 1] < 0, -1.0, 1.0)
    rho = np.maximum(ax, ay)
    gap = np.maximum(h - rho - t / 2, 0.0)
    push = np.maximum(0.0, t - 2 * gap)
    corner = np.minimum(ax, ay) >= rho - 1.5 * t - tol

    mirrored = 2 * h - rho + push
    x_face = np.where(ax >= ay, sx * mirrored, local[:, 0])
    y_face = np.where(ax >= ay, local[:, 1], sy * mirrored)
    rx = np.where(corner, sx * mirrored, x_face)
    ry = np.where(corner, sy * mirrored, y_face)
    sides = np.where(corner, t / 2, t)

    centers = np.stack([rx, ry], axis=1)
    lo, hi = centers - sides[:, None] / 2, centers + sides[:, None] / 2
    inside = _shell_contains(lo, hi, h, outer, tol)
    shrunk = ~inside
    if shrunk.any():
        sides = np.where(shrunk, np.minimum(sides / 2, dec.width / 2), sides)
        half = sides / 2
        lo_c, hi_c = h + half, outer - half
        normal_x = corner | (ax >= ay)
        normal_y = corner | (ax < ay)
        cx = np.where(shrunk & normal_x, sx * np.clip(np.abs(rx), lo_c, hi_c), rx)
        cy = np.where(shrunk & normal_y, sy * np.clip(np.abs(ry), lo_c, hi_c), ry)
        cx = np.clip(cx, -outer + half, outer - half)
        cy = np.clip(cy, -outer + half, outer - half)
        centers = np.stack([cx, cy], axis=1)
        lo, hi = centers - half[:, None], centers + half[:, None]
        if not _shell_contains(lo, hi, h, outer, tol).all():
            raise ExtensionError('reflected cubes could not be placed inside the ring')
        logger.warning(
            f"{int(shrunk.sum())} reflected cubes were shrunk to fit the ring",
            extra={'alpha': dec.ring.alpha},
        )

    dec.zones = np.where(corner, ZONE_CORNER, ZONE_FACE)
    dec.reflected_centers = centers + dec.origin
    dec.reflected_sides = sides
    dec.reflect_flags = {'shrunk': int(shrunk.sum()), 'corner': int(corner.sum())}
    return dec


def neighbor_pairs(dec):
    """
    Ordered pairs (j, j0), self pairs included, with kappa D_j meeting kappa D_j0.

    Candidates come from an infinity-norm ball query of radius 2.5 kappa t_j,
    which finds every neighbour at most four times larger; the list is then
    filtered exactly and symmetrised.
    """
    tree = cKDTree(dec.centers)
    radii = 2.5 * dec.kappa * dec.sides
    candidates = tree.query_ball_point(dec.centers, r=radii, p=np.inf)
    rows = np.repeat(np.arange(dec.count), [len(c) for c in candidates])
    cols = np.concatenate([np.asarray(c, dtype=int) for c in candidates])
    reach = dec.kappa * (dec.sides[rows] + dec.sides[cols]) / 2
    offset = np.abs(dec.centers[rows] - dec.centers[cols]).max(axis=1)
    keep = offset < reach - 1e-12 * reach
    pairs = np.stack([rows[keep], cols[keep]], axis=1)
    pairs = np.concatenate([pairs, pairs[:, ::-1]])
    return np.unique(pairs, axis=0)


def connectors(dec, dilation=None):
    """
    Connector boxes T_(j,j0) for every neighbour pair.

    T is the bounding box of D_j* and D_j0*, its widths multiplied by
    ``dilation`` and clipped to the outer cube. When T reaches into the hole
    it is cut to the half-plane piece {x >= h}, {x <= -h}, {y >= h} or
    {y <= -h} holding both reflected cubes; pairs with no such piece are
    flagged in ``connector_failed``.
    """
    if dec.reflected_centers is None:
        reflect(dec)
    dilation = resolve(dilation, 'CONNECTOR_DILATION')
    if dilation < 1:
        raise ValidationError(_('Connector dilation must be at least 1.'), code='dilation_range')
    pairs = neighbor_pairs(dec)
    h = dec.interface
    outer = dec.ring.cube.half
    tol = 1e-12 * outer
    rlo, rhi = dec.reflected_bounds()
    rlo, rhi = dec.local(rlo), dec.local(rhi)
    j, j0 = pairs[:, 0], pairs[:, 1]
    lo = np.minimum(rlo[j], rlo[j0])
    hi = np.maximum(rhi[j], rhi[j0])
    mid, half = (lo + hi) / 2, (hi - lo) * dilation / 2
    lo = np.clip(mid - half, -outer, outer)
    hi = np.clip(mid + half, -outer, outer)

    meets_hole = np.all((lo < h - tol) & (hi > -h + tol), axis=1)
    failed = meets_hole.copy()
    for axis in (0, 1):
        for sign in (1.0, -1.0):
            if sign > 0:
                both = (rlo[j, axis] >= h - tol) & (rlo[j0, axis] >= h - tol)
            else:
                both = (rhi[j, axis] <= -h + tol) & (rhi[j0, axis] <= -h + tol)
            cut = failed & both
            if sign > 0:
                lo[cut, axis] = np.maximum(lo[cut, axis], h)
            else:
                hi[cut, axis] = np.minimum(hi[cut, axis], -h)
            failed &= ~cut
    if failed.any():
        logger.warning(
            f"{int(failed.sum())} connectors reach into the hole and could not be clipped",
            extra={'alpha': dec.ring.alpha},
        )
    dec.pairs = pairs
    dec.connector_lo = lo + dec.origin
    dec.connector_hi = hi + dec.origin
    dec.connector_failed = failed
    return dec


@cache_result()
def build_decomposition(ring, core=False, kappa=None, i_cap=None, min_side=None):
    """Decompose, reflect and connect in one cached call."""
    dec = (decompose_core if core else decompose)(ring, kappa=kappa, i_cap=i_cap, min_side=min_side)
    reflect(dec)
    connectors(dec)
    return dec


# ---------------------------------------------------------------------------
# Bumps
# ---------------------------------------------------------------------------

def bump_profile(r, kappa):
    """1 for r <= 2 - kappa, 0 for r >= kappa, C^1 smoothstep in between."""
    u = np.clip((r - (2 - kappa)) / (2 * kappa - 2), 0.0, 1.0)
    return 1 - u * u * (3 - 2 * u)


def bump_profile_derivative(r, kappa):
    u = np.clip((r - (2 - kappa)) / (2 * kappa - 2), 0.0, 1.0)
    return -6 * u * (1 - u) / (2 * kappa - 2)


@dataclass
class Raster:
    """Values of sum_j a_j phi_j on grid cells, with the exact gradient."""

    values: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    weight_sum: np.ndarray

    @property
    def covered(self):
        return self.weight_sum > 0


@dataclass
class BumpFamily:
    """
    Shepard-normalised tensor bumps phi_j = psi_j / sum psi.

    psi_j is the product over both axes of the profile at |x_i - c_i|/(t_j/2),
    so supp phi_j lies in kappa D_j and psi_j = 1 on (2 - kappa) D_j.
    """

    centers: np.ndarray
    sides: np.ndarray
    kappa: float
    _tree: cKDTree | None = field(default=None, init=False, repr=False)

    def _factor(self, coords, center, side):
        scale = side / 2
        offset = coords - center
        r = np.abs(offset) / scale
        return bump_profile(r, self.kappa), bump_profile_derivative(r, self.kappa) * np.sign(offset) / scale

    def _window(self, xs, ys, j):
        reach = self.kappa * self.sides[j] / 2
        cx, cy = self.centers[j]
        i0, i1 = np.searchsorted(xs, cx - reach, 'right'), np.searchsorted(xs, cx + reach, 'left')
        k0, k1 = np.searchsorted(ys, cy - reach, 'right'), np.searchsorted(ys, cy + reach, 'left')
        return slice(i0, i1), slice(k0, k1)

    def _psi(self, xs, ys, j, rows, cols):
        hx, dhx = self._factor(xs[rows], self.centers[j, 0], self.sides[j])
        hy, dhy = self._factor(ys[cols], self.centers[j, 1], self.sides[j])
        return np.outer(hx, hy), np.outer(dhx, hy), np.outer(hx, dhy)

    def rasterize(self, coeffs, xs, ys, reference=0.0):
        """
        Sum of coeffs[j] phi_j at the cell centers xs x ys.

        Written as reference + sum (a_j - reference) psi_j / sum psi_j so that
        constant coefficients are reproduced exactly.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        shape = (len(xs), len(ys))
        S, Sx, Sy = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        N, Nx, Ny = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        for j in range(len(self.sides)):
            rows, cols = self._window(xs, ys, j)
            if rows.stop <= rows.start or cols.stop <= cols.start:
                continue
            psi, px, py = self._psi(xs, ys, j, rows, cols)
            a = coeffs[j] - reference
            S[rows, cols] += psi
            Sx[rows, cols] += px
            Sy[rows, cols] += py
            if a != 0:
                N[rows, cols] += a * psi
                Nx[rows, cols] += a * px
                Ny[rows, cols] += a * py
        covered = S > 0
        safe = np.where(covered, S, 1.0)
        values = np.where(covered, reference + N / safe, np.nan)
        gx = np.where(covered, (Nx * S - N * Sx) / safe ** 2, np.nan)
        gy = np.where(covered, (Ny * S - N * Sy) / safe ** 2, np.nan)
        return Raster(values, gx, gy, S)

    def partition_sum(self, xs, ys):
        """sum_j phi_j on the grid; 1 wherever some bump is active."""
        raster = self.rasterize(np.ones(len(self.sides)), xs, ys, reference=0.0)
        return np.where(raster.covered, raster.values, 0.0)

    def gradient_bounds(self, xs, ys):
        """max |grad phi_j| over the grid cells, for every j."""
        raster = self.rasterize(np.zeros(len(self.sides)), xs, ys)
        S = raster.weight_sum
        Sx, Sy = self._sum_gradient(xs, ys)
        bounds = np.zeros(len(self.sides))
        for j in range(len(self.sides)):
            rows, cols = self._window(xs, ys, j)
            if rows.stop <= rows.start or cols.stop <= cols.start:
                continue
            psi, px, py = self._psi(xs, ys, j, rows, cols)
            s = S[rows, cols]
            ok = s > 0
            gx = (px * s - psi * Sx[rows, cols]) / np.where(ok, s, 1.0) ** 2
            gy = (py * s - psi * Sy[rows, cols]) / np.where(ok, s, 1.0) ** 2
            bounds[j] = float(np.max(np.where(ok, np.hypot(gx, gy), 0.0)))
        return bounds

    def _sum_gradient(self, xs, ys):
        shape = (len(xs), len(ys))
        Sx, Sy = np.zeros(shape), np.zeros(shape)
        for j in range(len(self.sides)):
            rows, cols = self._window(xs, ys, j)
            if rows.stop <= rows.start or cols.stop <= cols.start:
                continue
            px, py = self._psi(xs, ys, j, rows, cols)[1:]
            Sx[rows, cols] += px
            Sy[rows, cols] += py
        return Sx, Sy

    def evaluate(self, points, coeffs=None):
        """
        phi-weighted sum at arbitrary points with its gradient.

        Returns:
            tuple: (values, gradients of shape (m, 2), weight sums); with no
            coeffs the values are sum_j phi_j
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        coeffs = np.ones(len(self.sides)) if coeffs is None else np.asarray(coeffs, dtype=float)
        if self._tree is None:
            self._tree = cKDTree(self.centers)
        reach = self.kappa * float(self.sides.max()) / 2
        candidates = self._tree.query_ball_point(pts, r=reach, p=np.inf)
        values = np.full(len(pts), np.nan)
        grads = np.full((len(pts), 2), np.nan)
        sums = np.zeros(len(pts))
        for m, idx in enumerate(candidates):
            if not idx:
                continue
            idx = np.asarray(idx)
            hx, dhx = self._factor(pts[m, 0], self.centers[idx, 0], self.sides[idx])
            hy, dhy = self._factor(pts[m, 1], self.centers[idx, 1], self.sides[idx])
            psi = hx * hy
            s = psi.sum()
            if s <= 0:
                continue
            sx, sy = (dhx * hy).sum(), (hx * dhy).sum()
            n = (coeffs[idx] * psi).sum()
            nx, ny = (coeffs[idx] * dhx * hy).sum(), (coeffs[idx] * hx * dhy).sum()
            sums[m] = s
            values[m] = n / s
            grads[m] = ((nx * s - n * sx) / s ** 2, (ny * s - n * sy) / s ** 2)
        return values, grads, sums


def bumps(dec):
    """The Shepard-normalised bump family on the cubes of ``dec``."""
    return BumpFamily(dec.centers, dec.sides, dec.kappa)


# ---------------------------------------------------------------------------
# Property checks
# ---------------------------------------------------------------------------

def _sample_axes(dec, resolution):
    lo = dec.origin - dec.ring.cube.half
    h = dec.ring.cube.side / resolution
    axis = (np.arange(resolution) + 0.5) * h
    return lo[0] + axis, lo[1] + axis


def box_counts(lo, hi, xs, ys, closed=False):
    """
    Number of boxes containing each sample point, by 2-D difference arrays.

    Boxes are open, or half-open [lo, hi) when ``closed`` is set.
    """
    side = 'left' if closed else 'right'
    i0, i1 = np.searchsorted(xs, lo[:, 0], side), np.searchsorted(xs, hi[:, 0], 'left')
    k0, k1 = np.searchsorted(ys, lo[:, 1], side), np.searchsorted(ys, hi[:, 1], 'left')
    valid = (i1 > i0) & (k1 > k0)
    i0, i1, k0, k1 = i0[valid], i1[valid], k0[valid], k1[valid]
    diff = np.zeros((len(xs) + 1, len(ys) + 1))
    np.add.at(diff, (i0, k0), 1)
    np.add.at(diff, (i1, k0), -1)
    np.add.at(diff, (i0, k1), -1)
    np.add.at(diff, (i1, k1), 1)
    return diff.cumsum(axis=0).cumsum(axis=1)[:-1, :-1]


def _box_distance(alo, ahi, blo, bhi):
    gap = np.maximum(0.0, np.maximum(blo - ahi, alo - bhi))
    return np.linalg.norm(gap, axis=1)


@log_runtime(threshold=30.0)
def check_properties(dec, resolution=512):
    """
    Recorded constants of the decomposition.

    A1 coverage defect and pairwise overlap area, A2 neighbour side ratio,
    A3 diameter-to-distance ratio, A4 overlap of the kappa-dilations, B1
    reflection ratios, B2 connector containment and size ratio, B3 connector
    overlap. A4 and B3 are sampled at resolution^2 points of the cube.
    """
    if dec.pairs is None:
        connectors(dec)
    lo, hi = dec.cube_bounds()
    j, j0 = dec.pairs[:, 0], dec.pairs[:, 1]
    distinct = j < j0
    overlap = np.prod(
        np.clip(np.minimum(hi[j], hi[j0]) - np.maximum(lo[j], lo[j0]), 0.0, None), axis=1
    )
    diam = np.sqrt(2) * dec.sides

    regular = dec.distances > 0
    a3 = float(np.max(diam[regular] / dec.distances[regular])) if regular.any() else None

    xs, ys = _sample_axes(dec, resolution)
    klo, khi = dec.cube_bounds(dec.kappa)
    a4 = float(box_counts(klo, khi, xs, ys).max())

    rlo, rhi = dec.reflected_bounds()
    rdiam = np.sqrt(2) * dec.reflected_sides
    dist = _box_distance(lo, hi, rlo, rhi)

    tlo, thi = dec.connector_lo, dec.connector_hi
    contains = np.all(
        (tlo <= np.minimum(rlo[j], rlo[j0]) + 1e-12) & (thi >= np.maximum(rhi[j], rhi[j0]) - 1e-12),
        axis=1,
    )
    tdiam = np.linalg.norm(thi - tlo, axis=1)
    b3 = float(box_counts(tlo, thi, xs, ys, closed=True).max())

    ring_ok = _shell_contains(
        dec.local(rlo), dec.local(rhi), dec.interface, dec.ring.cube.half, 1e-12 * dec.ring.cube.half
    )
    return {
        'A1': {
            'coverage_defect': dec.truncation['coverage_defect'],
            'strip_bound': dec.truncation['strip_bound'],
            'pairwise_overlap': float(overlap[distinct].sum()),
        },
        'A2': {'neighbor_ratio': float(np.max(dec.sides[j] / dec.sides[j0]))},
        'A3': {
            'diam_over_distance': a3,
            'final_side': dec.truncation['final_side'],
        },
        'A4': {'overlap': a4, 'kappa': dec.kappa},
        'B1': {
            'reflected_diam_min': float(np.min(rdiam / diam)),
            'reflected_diam_max': float(np.max(rdiam / diam)),
            'distance_min': float(np.min(dist / diam)),
            'distance_max': float(np.max(dist / diam)),
            'inside_ring': bool(ring_ok.all()),
        },
        'B2': {
            'contains_all': bool(contains.all()),
            'diam_ratio_max': float(np.max(tdiam / rdiam[j0])),
            'clip_failures': int(dec.connector_failed.sum()),
        },
        'B3': {'overlap': b3},
        'cubes': dec.count,
    }


def to_json(dec):
    """Decomposition export: cubes with reflections, connectors and truncation data."""
    if dec.reflected_centers is None:
        reflect(dec)
    cubes = [
        {
            'id': int(j),
            'center': dec.centers[j].tolist(),
            'side': float(dec.sides[j]),
            'layer': int(dec.layers[j]),
            'zone': 'corner' if dec.zones[j] == ZONE_CORNER else 'face',
            'reflected': {
                'center': dec.reflected_centers[j].tolist(),
                'side': float(dec.reflected_sides[j]),
            },
        }
        for j in range(dec.count)
    ]
    data = {
        'ring': dec.ring.to_dict(),
        'kappa': dec.kappa,
        'core': dec.core,
        'cubes': cubes,
        'truncation': dec.truncation,
    }
    if dec.pairs is not None:
        data['connectors'] = [
            {
                'j': int(a),
                'j0': int(b),
                'lo': dec.connector_lo[m].tolist(),
                'hi': dec.connector_hi[m].tolist(),
                'clip_failed': bool(dec.connector_failed[m]),
            }
            for m, (a, b) in enumerate(dec.pairs)
        ]
    return data
