"""
The reflection extension operator and its measured constants.

Every ring of a cube Q is sampled on the same grid over Q, so repeated
doubling steps never regrid: step k works on the ring of width 2^k alpha and
hands its output, defined on the ring of width 2^(k+1) alpha, to step k + 1.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from scipy.spatial import cKDTree

from .conf import resolve
from .error_handlers import DegenerateWeightError, ExtensionError
from .geometry import Cube, Ring
from .grid import GridFunction, cell_centers, norm_report
from .performance import log_runtime
from .validators import (
    validate_at_least_half,
    validate_below_half,
    validate_exponent,
    validate_open_unit,
    validate_positive,
)
from .weights import cell_masses
from .whitney import build_decomposition, bumps

logger = logging.getLogger(__name__)

SUITE_VERSION = '1'
DEFAULT_ALPHAS = (0.4, 0.2, 0.1)
DEFAULT_SCALES = (1.0, 0.5)
HALF_ALPHAS = (0.5, 0.75)


def iteration_count(alpha):
    """Smallest m >= 0 with 2^m alpha >= 1/2."""
    validate_open_unit(alpha)
    m = 0
    while math.ldexp(alpha, m) < 0.5:
        m += 1
    return m


def alpha_power_bracket(alpha, C1):
    """
    Check C1^m < alpha^(-log2 C1) <= C1^(m+1) in log space.

    Returns:
        dict: m, the three logarithms (base C1 exponents) and whether the
        bracket holds
    """
    validate_open_unit(alpha)
    if not C1 > 1:
        raise ValidationError(_('C1 must exceed 1.'), code='c1_range')
    m = iteration_count(alpha)
    exponent = -math.log2(alpha)
    tol = 1e-12 * max(1.0, exponent)
    return {
        'm': m,
        'lower': m * math.log(C1),
        'value': exponent * math.log(C1),
        'upper': (m + 1) * math.log(C1),
        'holds': m < exponent + tol and exponent <= m + 1 + tol,
    }


def ring_mask(box, resolution, alpha):
    """Cells of the grid on ``box`` whose centers lie in the closed ring of width alpha."""
    X, Y = cell_centers(box, resolution)
    cx, cy = box.center
    rho = np.maximum(np.abs(X - cx), np.abs(Y - cy))
    return rho >= (1 - alpha) * box.side / 2


@dataclass(frozen=True)
class ExtensionConstants:
    """
    Measured extension constants.

    ``C1`` is clamped below at 2; ``C1_measured`` keeps the raw maximum.
    ``m`` and ``alpha`` are set for a single full extension only.
    """

    C1: float
    C0: float | None
    c1: float
    kappa: float
    C1_measured: float | None = None
    m: int | None = None
    alpha: float | None = None
    predicted_bound: float | None = None
    measured_ratio: float | None = None
    step_ratios: tuple = ()
    samples: tuple = field(default=(), repr=False)
    suite_version: str = SUITE_VERSION

    def to_dict(self):
        return {
            'C1': self.C1,
            'C1_measured': self.C1_measured,
            'C0': self.C0,
            'c1': self.c1,
            'kappa': self.kappa,
            'm': self.m,
            'alpha': self.alpha,
            'predicted_bound': self.predicted_bound,
            'measured_ratio': self.measured_ratio,
            'step_ratios': list(self.step_ratios),
            'samples': list(self.samples),
            'suite_version': self.suite_version,
        }


@dataclass(eq=False)
class ExtensionStep:
    """
    One application of the operator.

    ``grid`` holds the input on R and sum_j a_j phi_j on R'. The analytic
    gradient of that sum is kept for the R' cells in ``grad_x``/``grad_y``.
    """

    ring: Ring
    grid: GridFunction
    input_mask: np.ndarray
    output_mask: np.ndarray
    coefficients: np.ndarray
    family: object
    grad_x: np.ndarray
    grad_y: np.ndarray
    input_norms: object
    output_norms: object
    uncovered: int
    decomposition: dict

    @property
    def ratio_lp(self):
        if self.input_norms.lp_u <= 0:
            return None
        return self.output_norms.lp_u / self.input_norms.lp_u

    @property
    def ratio_grad(self):
        if self.input_norms.lp_grad <= 1e-12 * max(1.0, self.input_norms.lp_u):
            return None
        return self.output_norms.lp_grad / self.input_norms.lp_grad

    @property
    def ratio(self):
        ratios = [r for r in (self.ratio_lp, self.ratio_grad) if r is not None]
        return max(ratios) if ratios else None

    def evaluate(self, points):
        """sum_j a_j phi_j at points of R' (NaN outside every bump)."""
        return self.family.evaluate(points, self.coefficients)[0]

    def gradient(self, points):
        return self.family.evaluate(points, self.coefficients)[1]

    def to_dict(self):
        return {
            'ring': self.ring.to_dict(),
            'ratio_lp': self.ratio_lp,
            'ratio_grad': self.ratio_grad,
            'input': self.input_norms.to_dict(),
            'output': self.output_norms.to_dict(),
            'uncovered_cells': self.uncovered,
            'decomposition': self.decomposition,
        }


def _check_input(u, ring, mask):
    same = np.allclose(u.box.center, ring.cube.center) and math.isclose(u.box.side, ring.cube.side)
    if not same:
        raise ValidationError(_('The grid must cover exactly the cube of the ring.'), code='grid_mismatch')
    if not np.all(u.defined[mask]):
        raise ValidationError(_('The input must be defined on every cell of the closed ring.'), code='ring_undefined')


def _reflected_averages(u, w, dec, mask):
    """Weighted averages of u over the cells of every reflected cube."""
    masses = cell_masses(w, u.box, u.resolution)
    X, Y = cell_centers(u.box, u.resolution)
    xs, ys = X[:, 0], Y[0, :]
    lo, hi = dec.reflected_bounds()
    tol = 1e-9 * u.spacing
    i0 = np.searchsorted(xs, lo[:, 0] - tol, 'left')
    i1 = np.searchsorted(xs, hi[:, 0] + tol, 'right')
    k0 = np.searchsorted(ys, lo[:, 1] - tol, 'left')
    k1 = np.searchsorted(ys, hi[:, 1] + tol, 'right')
    values = u.values
    tree = None
    coeffs = np.empty(dec.count)
    for j in range(dec.count):
        rows, cols = slice(i0[j], i1[j]), slice(k0[j], k1[j])
        keep = mask[rows, cols]
        if keep.any():
            v = values[rows, cols][keep]
            m = masses[rows, cols][keep]
        else:
            if tree is None:
                cells = np.argwhere(mask)
                tree = (cKDTree(np.stack([xs[cells[:, 0]], ys[cells[:, 1]]], axis=1)), cells)
            _, nearest = tree[0].query(dec.reflected_centers[j])
            a, b = tree[1][nearest]
            v, m = values[a:a + 1, b], masses[a:a + 1, b]
        total = math.fsum(m)
        if total <= 0:
            raise DegenerateWeightError(f"reflected cube {j} has zero mass for {w.name}", j)
        ref = float(v[0])
        coeffs[j] = ref + math.fsum(m * (v - ref)) / total
    return coeffs


def _fill_uncovered(values, covered, target):
    """Copy the nearest covered value into target cells no bump reaches."""
    missing = target & ~covered
    count = int(missing.sum())
    if count:
        have = np.argwhere(target & covered)
        if not len(have):
            raise ExtensionError('no grid cell of the extension region is reached by a bump')
        tree = cKDTree(have)
        _, nearest = tree.query(np.argwhere(missing))
        values[missing] = values[tuple(have[nearest].T)]
        logger.info(f"{count} uncovered cells filled from their nearest neighbour")
    return count


def _extend(u, ring, w, p, core, kappa, i_cap):
    validate_exponent(p)
    p = float(p)
    in_mask = ring_mask(u.box, u.resolution, ring.alpha)
    out_mask = np.ones_like(in_mask) if core else ring_mask(u.box, u.resolution, 2 * ring.alpha)
    _check_input(u, ring, in_mask)
    if not core and ring.width < 2 * u.spacing:
        raise ExtensionError(
            f"ring width {ring.width:.3g} is below two grid cells ({u.spacing:.3g} each)"
        )
    dec = build_decomposition(ring, core=core, kappa=kappa, i_cap=i_cap, min_side=2 * u.spacing)
    coeffs = _reflected_averages(u, w, dec, in_mask)
    family = bumps(dec)
    X, Y = cell_centers(u.box, u.resolution)
    raster = family.rasterize(coeffs, X[:, 0], Y[0, :], reference=float(coeffs[0]))

    target = out_mask & ~in_mask
    values = np.where(target, raster.values, np.nan)
    uncovered = _fill_uncovered(values, raster.covered, target)
    values[in_mask] = u.values[in_mask]
    out = GridFunction(u.box, values, out_mask)
    grad_x = np.where(target & raster.covered, raster.grad_x, np.nan)
    grad_y = np.where(target & raster.covered, raster.grad_y, np.nan)

    step = ExtensionStep(
        ring=ring,
        grid=out,
        input_mask=in_mask,
        output_mask=out_mask,
        coefficients=coeffs,
        family=family,
        grad_x=grad_x,
        grad_y=grad_y,
        input_norms=norm_report(u, w, p, mask=in_mask),
        output_norms=norm_report(out, w, p, mask=out_mask),
        uncovered=uncovered,
        decomposition=dec.summary(),
    )
    logger.debug(
        f"Extension step alpha={ring.alpha:g}: ratios {step.ratio_lp}, {step.ratio_grad}",
        extra={'alpha': ring.alpha, 'core': core},
    )
    return step


def extend_once(u, ring, w, p=2, kappa=None, i_cap=None):
    """
    Extend u from the closed ring R (alpha < 1/2) to the ring 2R of double width.

    Cells of R keep their input values bitwise; cells of R' get
    sum_j u_(D_j*) phi_j with u_(D_j*) the w-weighted average over the
    cells of the reflected cube.

    Returns:
        ExtensionStep

    Raises:
        ValidationError: If alpha >= 1/2 or u is not defined on R
        ExtensionError: If the ring is thinner than two grid cells
    """
    validate_below_half(ring.alpha)
    return _extend(u, ring, w, p, False, kappa, i_cap)


def extend_half(u, ring, w, p=2, kappa=None, i_cap=None):
    """Extend u from a ring with alpha >= 1/2 to the whole cube."""
    validate_at_least_half(ring.alpha)
    return _extend(u, ring, w, p, True, kappa, i_cap)


@log_runtime(threshold=60.0)
def extend_full(u, cube, alpha, w, p=2, kappa=None, i_cap=None):
    """
    Extend u from the ring of width alpha to all of ``cube``.

    Applies ``extend_once`` m times, m = iteration_count(alpha), then
    ``extend_half``. Each step takes the previous output as input, so the
    one-step L^p ratios multiply to the full ratio.

    Returns:
        tuple: (GridFunction on the cube, ExtensionConstants, list of steps)
    """
    m = iteration_count(alpha)
    kappa = resolve(kappa, 'WHITNEY_KAPPA')
    steps = []
    current = u
    for k in range(m):
        step = extend_once(current, Ring(cube, math.ldexp(alpha, k)), w, p, kappa, i_cap)
        steps.append(step)
        current = step.grid
    final = extend_half(current, Ring(cube, math.ldexp(alpha, m)), w, p, kappa, i_cap)
    steps.append(final)

    first, last = steps[0].input_norms, final.output_norms
    full = [last.lp_u / first.lp_u if first.lp_u > 0 else None]
    if steps[0].ratio_grad is not None:
        full.append(last.lp_grad / first.lp_grad)
    full = [r for r in full if r is not None]
    once = [s.ratio for s in steps[:-1] if s.ratio is not None]
    measured_C1 = max(once) if once else None
    C1 = max(2.0, measured_C1 or 0.0)
    C0 = final.ratio
    constants = ExtensionConstants(
        C1=C1,
        C0=C0,
        c1=math.log2(C1),
        kappa=kappa,
        C1_measured=measured_C1,
        m=m,
        alpha=alpha,
        predicted_bound=None if C0 is None else C0 * C1 ** m,
        measured_ratio=max(full) if full else None,
        step_ratios=tuple(s.ratio for s in steps),
    )
    return final.grid, constants, steps


def _trig_polynomial(seed, degree=3):
    rng = np.random.default_rng(seed)
    freqs = rng.integers(-degree, degree + 1, size=(degree + 1, 2))
    amps = rng.normal(size=degree + 1) / (1 + np.abs(freqs).sum(axis=1))
    phases = rng.uniform(0, 2 * np.pi, size=degree + 1)

    def trig(points):
        x = np.asarray(points, dtype=float)
        arg = 2 * np.pi * (x[..., 0, None] * freqs[:, 0] + x[..., 1, None] * freqs[:, 1]) + phases
        return np.sum(amps * np.sin(arg), axis=-1)

    return trig


def default_suite(seed=None, x0=(0.25, 0.1)):
    """
    Versioned suite of Lipschitz test functions.

    Returns:
        list: (name, callable) pairs; callables map points (..., 2) to values
    """
    seed = resolve(seed, 'SEED')
    x0 = np.asarray(x0, dtype=float)

    def radial(beta):
        return lambda x: np.linalg.norm(np.asarray(x) - x0, axis=-1) ** beta

    return [
        ('constant', lambda x: np.ones(np.shape(x)[:-1])),
        ('x1', lambda x: np.asarray(x)[..., 0]),
        ('x2', lambda x: np.asarray(x)[..., 1]),
        ('radial_0.5', radial(0.5)),
        ('radial_1', radial(1.0)),
        ('x1x2', lambda x: np.asarray(x)[..., 0] * np.asarray(x)[..., 1]),
        ('trig', _trig_polynomial(seed)),
    ]


@log_runtime(threshold=120.0)
def measure_constants(w, p=2, test_suite=None, alphas=DEFAULT_ALPHAS, scales=DEFAULT_SCALES,
                      resolution=None, half_alphas=HALF_ALPHAS, kappa=None):
    """
    Empirical one-step and final-step constants.

    Every (function, alpha, scale) run extends the suite function from the
    ring of the cube of side ``scale`` centred at the origin, sampled with
    ``resolution`` cells per side. C1 is the largest one-step ratio over all
    runs (L^p and gradient L^p), clamped below at 2; C0 is the largest
    ratio of the final half-step over ``half_alphas``.

    Raises:
        ValidationError: If the suite is empty
    """
    suite = default_suite() if test_suite is None else list(test_suite)
    if not suite:
        raise ValidationError(_('The test-function suite is empty.'), code='empty_suite')
    resolution = resolve(resolution, 'GRID_RESOLUTION')
    kappa = resolve(kappa, 'WHITNEY_KAPPA')
    for a in alphas:
        validate_below_half(a)
    for a in half_alphas:
        validate_at_least_half(a)
        validate_open_unit(a)
    for scale in scales:
        validate_positive(scale)

    samples = []

    def run(kind, alpha, scale):
        cube = Cube((0.0, 0.0), float(scale))
        ring = Ring(cube, alpha)
        mask = ring_mask(cube, resolution, alpha)
        ratios = []
        for name, func in suite:
            u = GridFunction.sample(func, cube, resolution, mask=mask)
            extend = extend_once if kind == 'once' else extend_half
            step = extend(u, ring, w, p, kappa)
            samples.append({
                'step': kind,
                'function': name,
                'alpha': alpha,
                'scale': scale,
                'ratio_lp': step.ratio_lp,
                'ratio_grad': step.ratio_grad,
            })
            if step.ratio is not None:
                ratios.append(step.ratio)
        return ratios

    once = [r for scale in scales for a in alphas for r in run('once', a, scale)]
    half = [r for scale in scales for a in half_alphas for r in run('half', a, scale)]
    measured = max(once) if once else None
    C1 = max(2.0, measured or 0.0)
    if measured is not None and measured < 2:
        logger.info(f"Measured C1 {measured:.4g} clamped to 2", extra={'weight': w.name})
    return ExtensionConstants(
        C1=C1,
        C0=max(half) if half else None,
        c1=math.log2(C1),
        kappa=kappa,
        C1_measured=measured,
        samples=tuple(samples),
    )
