"""
Weights on the plane, weighted measures and their structural exponents.

A weight w >= 0 defines the measure mu(A) = integral of w over A. Measures of
boxes are computed by adaptive cell quadrature: every cell carries a pair of
tensor Gauss-Legendre estimates whose difference is the error indicator, and
the cells with the largest errors are split until the summed error is below
tol * |value|. Cells touching a singular point of the weight count their whole
contribution as error, so they are subdivided until they no longer matter.
"""

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from scipy import integrate, special

from .conf import resolve
from .error_handlers import DegenerateWeightError, QuadratureError
from .geometry import Box, Cube, Ring
from .performance import cache_result, log_runtime
from .validators import (
    validate_distance_beta,
    validate_exponent,
    validate_min_count,
    validate_open_unit,
    validate_positive,
    validate_power_gamma,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Weight catalogue
# ---------------------------------------------------------------------------

class Weight:
    """Base class of the weight catalogue. Subclasses are frozen dataclasses."""

    kind = 'weight'
    translation_invariant = False

    def __call__(self, points):
        raise NotImplementedError

    @property
    def name(self):
        return self.kind

    def singular_mask(self, lo, hi):
        """Boolean per cell: does the closed cell [lo, hi] touch an unbounded singularity."""
        return np.zeros(len(lo), dtype=bool)

    def singular_points(self):
        """Isolated singular points, used to anchor exponent sampling."""
        return ()

    def exact_box_measure(self, lo, hi):
        """Closed-form mass of a box when one is available, else None."""
        return None

    def analytic_exponents(self):
        """Known (doubling, delta, delta_prime, sigma), entries None when unknown."""
        return None

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantWeight(Weight):
    """w = value; value 1 is Lebesgue measure."""

    value: float = 1.0
    kind = 'constant'
    translation_invariant = True

    def __post_init__(self):
        validate_positive(self.value)

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        return np.full(pts.shape[:-1], self.value)

    def exact_box_measure(self, lo, hi):
        return self.value * float(np.prod(np.asarray(hi) - np.asarray(lo)))

    def analytic_exponents(self):
        return {'doubling_constant': 4.0, 'delta': 2.0, 'delta_prime': 2.0, 'sigma': 1.0}

    def to_config(self):
        return {'kind': self.kind, 'value': self.value}


@dataclass(frozen=True)
class PowerWeight(Weight):
    """w = |x - center|^gamma with gamma > -2."""

    gamma: float
    center: tuple = (0.0, 0.0)
    kind = 'power'

    def __post_init__(self):
        object.__setattr__(self, 'center', tuple(float(c) for c in self.center))
        validate_power_gamma(self.gamma, n=len(self.center))

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        r = np.linalg.norm(pts - np.asarray(self.center), axis=-1)
        with np.errstate(divide='ignore'):
            return np.power(r, self.gamma)

    def singular_mask(self, lo, hi):
        if self.gamma >= 0:
            return np.zeros(len(lo), dtype=bool)
        c = np.asarray(self.center)
        return np.all((lo <= c) & (c <= hi), axis=1)

    def singular_points(self):
        return (self.center,)

    def analytic_exponents(self):
        n = len(self.center)
        return {
            'doubling_constant': None,
            'delta': min(float(n), n + self.gamma),
            'delta_prime': max(float(n), n + self.gamma),
            'sigma': None,
        }

    def to_config(self):
        return {'kind': self.kind, 'gamma': self.gamma, 'center': list(self.center)}


@dataclass(frozen=True)
class AxisWeight(Weight):
    """w = |x_axis - offset|^beta; beta=1 on axis 0 is the weight |x_1|."""

    beta: float
    axis: int = 0
    offset: float = 0.0
    kind = 'axis'

    def __post_init__(self):
        validate_distance_beta(self.beta, codimension=1)
        if self.axis not in (0, 1):
            raise ValidationError(_('Axis must be 0 or 1.'), code='bad_axis')

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        with np.errstate(divide='ignore'):
            return np.power(np.abs(pts[..., self.axis] - self.offset), self.beta)

    def singular_mask(self, lo, hi):
        if self.beta >= 0:
            return np.zeros(len(lo), dtype=bool)
        return (lo[:, self.axis] <= self.offset) & (self.offset <= hi[:, self.axis])

    def exact_box_measure(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        a, b = lo[self.axis] - self.offset, hi[self.axis] - self.offset
        e = self.beta + 1

        def primitive(t):
            return math.copysign(abs(t) ** e / e, t)

        other = float(np.prod(np.delete(hi - lo, self.axis)))
        return (primitive(b) - primitive(a)) * other

    def to_config(self):
        return {'kind': self.kind, 'beta': self.beta, 'axis': self.axis, 'offset': self.offset}


@dataclass(frozen=True)
class DistanceWeight(Weight):
    """w = dist(x, F)^beta for a finite set F of points and segments."""

    beta: float
    points: tuple = ()
    segments: tuple = ()
    kind = 'distance'

    def __post_init__(self):
        object.__setattr__(self, 'points', tuple(tuple(float(v) for v in p) for p in self.points))
        object.__setattr__(
            self,
            'segments',
            tuple(tuple(tuple(float(v) for v in end) for end in seg) for seg in self.segments),
        )
        if not self.points and not self.segments:
            raise ValidationError(
                _('A distance weight needs at least one point or segment.'), code='empty_set'
            )
        validate_distance_beta(self.beta, codimension=1 if self.segments else 2)

    def distance(self, points):
        pts = np.asarray(points, dtype=float)
        best = np.full(pts.shape[:-1], np.inf)
        for p in self.points:
            best = np.minimum(best, np.linalg.norm(pts - np.asarray(p), axis=-1))
        for a, b in self.segments:
            a = np.asarray(a)
            d = np.asarray(b) - a
            length2 = float(d @ d)
            t = np.clip(((pts - a) @ d) / length2, 0.0, 1.0) if length2 > 0 else 0.0
            proj = a + np.asarray(t)[..., None] * d
            best = np.minimum(best, np.linalg.norm(pts - proj, axis=-1))
        return best

    def __call__(self, points):
        with np.errstate(divide='ignore'):
            return np.power(self.distance(points), self.beta)

    def singular_mask(self, lo, hi):
        mask = np.zeros(len(lo), dtype=bool)
        if self.beta >= 0:
            return mask
        for p in self.points:
            mask |= np.all((lo <= p) & (p <= hi), axis=1)
        for a, b in self.segments:
            mask |= _segment_meets_cells(np.asarray(a), np.asarray(b), lo, hi)
        return mask

    def singular_points(self):
        return self.points

    def to_config(self):
        return {
            'kind': self.kind,
            'beta': self.beta,
            'points': [list(p) for p in self.points],
            'segments': [[list(a), list(b)] for a, b in self.segments],
        }


@dataclass(frozen=True)
class ProductWeight(Weight):
    """Pointwise product of catalogue weights."""

    factors: tuple = field(default_factory=tuple)
    kind = 'product'

    def __post_init__(self):
        object.__setattr__(self, 'factors', tuple(self.factors))
        if not self.factors:
            raise ValidationError(_('A product weight needs factors.'), code='empty_product')

    @property
    def translation_invariant(self):
        return all(f.translation_invariant for f in self.factors)

    @property
    def name(self):
        return '*'.join(f.name for f in self.factors)

    def __call__(self, points):
        value = self.factors[0](points)
        for f in self.factors[1:]:
            value = value * f(points)
        return value

    def singular_mask(self, lo, hi):
        mask = np.zeros(len(lo), dtype=bool)
        for f in self.factors:
            mask |= f.singular_mask(lo, hi)
        return mask

    def singular_points(self):
        return tuple(p for f in self.factors for p in f.singular_points())

    def to_config(self):
        return {'kind': self.kind, 'factors': [f.to_config() for f in self.factors]}


def _segment_meets_cells(a, b, lo, hi):
    """Liang-Barsky test of the segment [a, b] against every closed cell."""
    d = b - a
    t_enter = np.zeros(len(lo))
    t_exit = np.ones(len(lo))
    ok = np.ones(len(lo), dtype=bool)
    for i in range(len(a)):
        if d[i] == 0:
            ok &= (lo[:, i] <= a[i]) & (a[i] <= hi[:, i])
            continue
        ta = (lo[:, i] - a[i]) / d[i]
        tb = (hi[:, i] - a[i]) / d[i]
        t_enter = np.maximum(t_enter, np.minimum(ta, tb))
        t_exit = np.minimum(t_exit, np.maximum(ta, tb))
    return ok & (t_enter <= t_exit)


WEIGHT_KINDS = {
    'constant': ConstantWeight,
    'power': PowerWeight,
    'axis': AxisWeight,
    'distance': DistanceWeight,
    'product': ProductWeight,
}


def weight_from_config(config):
    """
    Build a weight from its structured config.

    Args:
        config: Mapping with a ``kind`` key and the parameters of that kind,
            e.g. ``{"kind": "power", "gamma": -1}`` or
            ``{"kind": "product", "factors": [...]}``

    Returns:
        Weight: The configured weight

    Raises:
        ValidationError: If the kind is unknown or a parameter is invalid
    """
    if not isinstance(config, dict) or 'kind' not in config:
        raise ValidationError(_('Weight config must be an object with a "kind".'), code='bad_weight')
    kind = config['kind']
    params = {k: v for k, v in config.items() if k != 'kind'}
    if kind not in WEIGHT_KINDS:
        raise ValidationError(
            _('Unknown weight kind %(kind)s.'), code='unknown_weight', params={'kind': kind}
        )
    if kind == 'product':
        params['factors'] = tuple(weight_from_config(f) for f in params.get('factors', ()))
    if kind == 'distance':
        params['points'] = tuple(tuple(p) for p in params.get('points', ()))
        params['segments'] = tuple(tuple(tuple(e) for e in s) for s in params.get('segments', ()))
    if kind == 'power' and 'center' in params:
        params['center'] = tuple(params['center'])
    try:
        return WEIGHT_KINDS[kind](**params)
    except TypeError as e:
        raise ValidationError(
            _('Bad parameters for weight %(kind)s: %(error)s'),
            code='bad_weight_params',
            params={'kind': kind, 'error': str(e)},
        )


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasureEstimate:
    """Weighted mass with its quadrature error bound and evaluation count."""

    value: float
    abs_error_bound: float
    evaluations: int

    def to_dict(self):
        return {'value': self.value, 'error': self.abs_error_bound, 'evals': self.evaluations}


@functools.lru_cache(maxsize=16)
def _tensor_rule(order):
    """Nodes on [0, 1]^2 and weights of the tensor Gauss-Legendre rule."""
    x, wts = np.polynomial.legendre.leggauss(order)
    x = (x + 1) / 2
    wts = wts / 2
    nodes = np.stack(np.meshgrid(x, x, indexing='ij'), axis=-1).reshape(-1, 2)
    weights = np.outer(wts, wts).reshape(-1)
    return nodes, weights


def _cell_rule(w, lo, hi, order):
    """Tensor Gauss estimate of the mass of every cell [lo_k, hi_k]."""
    nodes, weights = _tensor_rule(order)
    widths = hi - lo
    pts = lo[:, None, :] + nodes[None, :, :] * widths[:, None, :]
    values = w(pts)
    return (values @ weights) * np.prod(widths, axis=1)


def _evaluate_cells(w, lo, hi, order):
    high = _cell_rule(w, lo, hi, order)
    low = _cell_rule(w, lo, hi, max(order // 2, 1))
    error = np.abs(high - low)
    singular = w.singular_mask(lo, hi)
    error = np.where(singular, np.maximum(error, np.abs(high)), error)
    return high, error, len(lo) * (order ** 2 + max(order // 2, 1) ** 2)


def _box_bounds(box):
    lo, hi = box.bounds()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(hi <= lo):
        raise ValidationError(_('Box is degenerate.'), code='degenerate_box')
    return lo, hi


def measure_box(w, box, tol=None, max_evaluations=None, order=None):
    """
    Weighted mass of a cube or box by adaptive cell quadrature.

    Args:
        w: Weight
        box: Cube or Box
        tol: Relative tolerance (default QUAD_TOL)
        max_evaluations: Budget of weight evaluations (default QUAD_MAX_EVALUATIONS)
        order: Gauss order of the high rule (default GAUSS_ORDER)

    Returns:
        MeasureEstimate: value with |value - mu(box)| <= tol * value (estimated)

    Raises:
        ValidationError: If tol <= 0 or the box is degenerate
        QuadratureError: If the budget runs out first; carries the best estimate
    """
    tol = validate_positive(resolve(tol, 'QUAD_TOL'))
    max_evaluations = resolve(max_evaluations, 'QUAD_MAX_EVALUATIONS')
    order = resolve(order, 'GAUSS_ORDER')
    lo, hi = _box_bounds(box)

    exact = w.exact_box_measure(lo, hi)
    if exact is not None:
        return MeasureEstimate(float(exact), 0.0, 0)

    cell_lo, cell_hi = lo[None, :], hi[None, :]
    values, errors, evaluations = _evaluate_cells(w, cell_lo, cell_hi, order)
    while True:
        total = math.fsum(values)
        total_error = math.fsum(errors)
        if total_error <= tol * abs(total):
            return MeasureEstimate(total, total_error, evaluations)
        if evaluations >= max_evaluations:
            achieved = total_error / abs(total) if total else math.inf
            logger.warning(
                f"Quadrature budget exhausted for {w.name}: rel. error {achieved:.3g} > {tol:.3g}",
                extra={'weight': w.to_config(), 'evaluations': evaluations},
            )
            raise QuadratureError(
                f"quadrature did not reach tol={tol:g} within {max_evaluations} evaluations",
                best_estimate=MeasureEstimate(total, total_error, evaluations),
                achieved_tol=achieved,
                evaluations=evaluations,
            )

        split = errors >= 0.25 * errors.max()
        keep = ~split
        mid = (cell_lo[split] + cell_hi[split]) / 2
        parents_lo, parents_hi = cell_lo[split], cell_hi[split]
        children_lo, children_hi = [], []
        for corner in ((0, 0), (1, 0), (0, 1), (1, 1)):
            c = np.asarray(corner, dtype=bool)
            children_lo.append(np.where(c, mid, parents_lo))
            children_hi.append(np.where(c, parents_hi, mid))
        new_lo = np.concatenate(children_lo)
        new_hi = np.concatenate(children_hi)
        new_values, new_errors, used = _evaluate_cells(w, new_lo, new_hi, order)
        evaluations += used
        cell_lo = np.concatenate([cell_lo[keep], new_lo])
        cell_hi = np.concatenate([cell_hi[keep], new_hi])
        values = np.concatenate([values[keep], new_values])
        errors = np.concatenate([errors[keep], new_errors])


def measure_ring(w, ring, tol=None, max_evaluations=None):
    """
    Weighted mass of the ring R, as mu(Q) - mu((1 - alpha)Q).

    Returns:
        MeasureEstimate: value clamped at 0, errors and evaluations summed
    """
    outer = measure_box(w, ring.cube, tol=tol, max_evaluations=max_evaluations)
    inner = measure_box(w, ring.inner_cube(), tol=tol, max_evaluations=max_evaluations)
    return MeasureEstimate(
        max(outer.value - inner.value, 0.0),
        outer.abs_error_bound + inner.abs_error_bound,
        outer.evaluations + inner.evaluations,
    )


@cache_result()
def cell_masses(w, box, resolution, tol=None):
    """
    Per-cell masses on the uniform resolution x resolution grid of ``box``.

    Regular cells use a vectorised 3x3 Gauss rule; cells touching a
    singularity of the weight fall back to ``measure_box`` at ``tol``.

    Returns:
        ndarray: masses indexed [i, j] with i along x_1 and j along x_2
    """
    tol = resolve(tol, 'QUAD_COARSE_TOL')
    lo, hi = _box_bounds(box)
    h = (hi - lo) / resolution
    if w.translation_invariant:
        return np.full((resolution, resolution), measure_box(w, Box(lo, lo + h)).value)

    masses = np.empty((resolution, resolution))
    j = np.arange(resolution)
    for i in range(resolution):
        cell_lo = np.stack([np.full(resolution, lo[0] + i * h[0]), lo[1] + j * h[1]], axis=1)
        cell_hi = cell_lo + h
        exact = w.exact_box_measure(cell_lo[0], cell_hi[0])
        if exact is not None:
            masses[i] = [w.exact_box_measure(a, b) for a, b in zip(cell_lo, cell_hi)]
            continue
        masses[i] = _cell_rule(w, cell_lo, cell_hi, 3)
        for k in np.flatnonzero(w.singular_mask(cell_lo, cell_hi)):
            masses[i, k] = measure_box(w, Box(cell_lo[k], cell_hi[k]), tol=tol).value
    return masses


# ---------------------------------------------------------------------------
# Structural exponents
# ---------------------------------------------------------------------------

@dataclass
class WeightExponents:
    """Doubling constant and homogeneity/annular-decay exponents with provenance."""

    doubling_constant: float | None = None
    delta: float | None = None
    delta_prime: float | None = None
    sigma: float | None = None
    sigma_constant: float | None = None
    residuals: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)
    clamps: list = field(default_factory=list)
    anchored_samples: int = 0
    source: str = 'estimated'

    def to_dict(self):
        return {
            'doubling_constant': self.doubling_constant,
            'delta': self.delta,
            'delta_prime': self.delta_prime,
            'sigma': self.sigma,
            'sigma_constant': self.sigma_constant,
            'residuals': self.residuals,
            'samples': self.samples,
            'clamps': self.clamps,
            'anchored_samples': self.anchored_samples,
            'source': self.source,
        }


@dataclass
class AnnularDecayFit:
    sigma: float
    constant: float
    residual: float
    samples: int
    monotone: bool
    clamps: list = field(default_factory=list)


def _record_clamp(clamps, name, raw, value, reason):
    clamps.append({'exponent': name, 'raw': raw, 'clamped': value, 'reason': reason})
    logger.warning(
        f"Clamped {name} from {raw:.6g} to {value:.6g} ({reason})",
        extra={'exponent': name, 'raw': raw, 'clamped': value},
    )


def _sample_cube(rng, domain, side_min, side_max, reach=0.5):
    """Log-uniform side; the cube of side 2*reach*side stays inside the domain."""
    side = math.exp(rng.uniform(math.log(side_min), math.log(side_max)))
    lo, hi = domain.bounds()
    center = rng.uniform(lo + reach * side, hi - reach * side)
    return Cube(tuple(center), side)


def _anchors_in(w, domain):
    return [p for p in w.singular_points() if bool(domain.contains(np.asarray(p))[0])]


def _positive_mass(w, cube, tol):
    mass = measure_box(w, cube, tol=tol).value
    if mass <= 0:
        raise DegenerateWeightError(f"weight {w.name} has zero mass on cube {cube.to_dict()}", cube)
    return mass


def _envelope_slopes(x, y, bins=8):
    """Slopes and intercepts of the upper and lower envelopes of (x, y)."""
    edges = np.linspace(x.min(), x.max(), bins + 1)
    which = np.clip(np.digitize(x, edges) - 1, 0, bins - 1)
    upper, lower = [], []
    for b in range(bins):
        idx = np.flatnonzero(which == b)
        if len(idx):
            upper.append(idx[np.argmax(y[idx])])
            lower.append(idx[np.argmin(y[idx])])
    upper, lower = np.asarray(upper), np.asarray(lower)
    fits = {}
    for label, idx in (('upper', upper), ('lower', lower)):
        if len(np.unique(x[idx])) < 2:
            slope = float(np.mean(y[idx] / x[idx]))
            intercept, residual = 0.0, 0.0
        else:
            slope, intercept = np.polyfit(x[idx], y[idx], 1)
            residual = float(np.sqrt(np.mean((y[idx] - (slope * x[idx] + intercept)) ** 2)))
        fits[label] = (float(slope), float(intercept), residual)
    return fits


@log_runtime(threshold=30.0)
def estimate_doubling(w, domain, samples=64, rng_seed=None, side_min=None, tol=1e-6):
    """
    Estimate the doubling constant and the homogeneity exponents delta, delta'.

    C_D is the largest mu(2Q)/mu(Q) over sampled cubes with 2Q inside the
    domain. delta and delta' are the slopes of the upper and lower envelopes
    of log(mu(Q')/mu(Q)) against log(l(Q')/l(Q)) over sampled nested pairs.
    Cubes centred at the singular points of the weight are always included.

    Raises:
        ValidationError: If samples < 1
        DegenerateWeightError: If a sampled cube has zero mass
    """
    samples = validate_min_count(samples, 1, 'samples')
    rng = np.random.default_rng(resolve(rng_seed, 'SEED'))
    n = domain.n
    side_min = side_min or domain.side / 256
    clamps = []

    cubes = [
        _sample_cube(rng, domain, side_min, domain.side / 2, reach=1.0) for _ in range(samples)
    ]
    anchors = _anchors_in(w, domain)
    anchored = []
    for point in anchors:
        for k in range(1, 9):
            side = domain.side * 2.0 ** (-k - 1)
            anchored.append(Cube(point, side))
    doubling = 0.0
    for cube in cubes + anchored:
        ratio = measure_box(w, cube.scaled(2), tol=tol).value / _positive_mass(w, cube, tol)
        doubling = max(doubling, ratio)

    logs_x, logs_y = [], []
    for _ in range(samples):
        outer = _sample_cube(rng, domain, side_min, domain.side)
        t = math.exp(rng.uniform(math.log(1 / 64), 0.0))
        inner_side = outer.side * t
        lo, hi = outer.bounds()
        center = rng.uniform(lo + inner_side / 2, hi - inner_side / 2)
        inner = Cube(tuple(center), inner_side)
        logs_x.append(math.log(t))
        logs_y.append(math.log(_positive_mass(w, inner, tol) / _positive_mass(w, outer, tol)))
    for point in anchors:
        outer = Cube(point, domain.side / 2)
        for k in range(1, 7):
            inner = outer.scaled(2.0 ** -k)
            logs_x.append(-k * math.log(2))
            logs_y.append(math.log(_positive_mass(w, inner, tol) / _positive_mass(w, outer, tol)))
    x = np.asarray(logs_x)
    y = np.asarray(logs_y)
    fits = _envelope_slopes(x, y)
    delta, _, delta_residual = fits['upper']
    delta_prime, _, delta_prime_residual = fits['lower']

    if delta > n:
        _record_clamp(clamps, 'delta', delta, float(n), 'delta <= n')
        delta = float(n)
    if delta <= 0:
        _record_clamp(clamps, 'delta', delta, 1e-6, 'delta > 0')
        delta = 1e-6
    if delta_prime < n:
        _record_clamp(clamps, 'delta_prime', delta_prime, float(n), 'delta_prime >= n')
        delta_prime = float(n)

    logger.info(
        f"Doubling profile of {w.name}: C_D={doubling:.4f} delta={delta:.4f} "
        f"delta'={delta_prime:.4f}",
        extra={'weight': w.to_config()},
    )
    return WeightExponents(
        doubling_constant=doubling,
        delta=delta,
        delta_prime=delta_prime,
        residuals={'delta': delta_residual, 'delta_prime': delta_prime_residual},
        samples={'doubling': len(cubes) + len(anchored), 'homogeneity': len(x)},
        clamps=clamps,
        anchored_samples=len(anchored),
    )


DEFAULT_ALPHAS = tuple(2.0 ** -k for k in range(2, 10))


@log_runtime(threshold=30.0)
def estimate_annular_decay(w, domain, alphas=DEFAULT_ALPHAS, samples=16, rng_seed=None,
                           delta=None, tol=1e-8):
    """
    Fit the annular decay mu(R) <= C alpha^sigma mu(Q).

    For every alpha the largest ratio mu(R)/mu(Q) over the sampled cubes is
    taken; sigma is the slope of log ratio against log alpha, clamped to
    (0, 1] and raised to delta + 1 - n when ``delta`` is given. The constant
    C is the smallest value making the bound hold on every sample.

    Returns:
        AnnularDecayFit
    """
    samples = validate_min_count(samples, 1, 'samples')
    alphas = tuple(validate_open_unit(a) for a in alphas)
    if len(alphas) < 2:
        raise ValidationError(_('At least two ring thicknesses are needed.'), code='few_alphas')
    rng = np.random.default_rng(resolve(rng_seed, 'SEED'))
    n = domain.n
    cubes = [_sample_cube(rng, domain, domain.side / 64, domain.side) for _ in range(samples)]
    cubes += [Cube(p, domain.side / 2) for p in _anchors_in(w, domain)]

    ratios = np.empty((len(cubes), len(alphas)))
    for i, cube in enumerate(cubes):
        total = _positive_mass(w, cube, tol)
        for j, alpha in enumerate(alphas):
            ratios[i, j] = measure_ring(w, Ring(cube, alpha), tol=tol).value / total

    order = np.argsort(alphas)
    monotone = bool(np.all(np.diff(ratios[:, order], axis=1) >= -1e-12))
    log_alpha = np.log(np.asarray(alphas))
    envelope = np.log(ratios.max(axis=0))
    sigma, intercept = np.polyfit(log_alpha, envelope, 1)
    residual = float(np.sqrt(np.mean((envelope - (sigma * log_alpha + intercept)) ** 2)))
    sigma = float(sigma)
    clamps = []
    if sigma > 1:
        _record_clamp(clamps, 'sigma', sigma, 1.0, 'sigma <= 1')
        sigma = 1.0
    if sigma <= 0:
        _record_clamp(clamps, 'sigma', sigma, 1e-6, 'sigma > 0')
        sigma = 1e-6
    if delta is not None and sigma < delta + 1 - n:
        _record_clamp(clamps, 'sigma', sigma, delta + 1 - n, 'sigma >= delta + 1 - n')
        sigma = float(delta + 1 - n)
    constant = float(np.max(ratios / np.power(np.asarray(alphas), sigma)))
    return AnnularDecayFit(sigma, constant, residual, ratios.size, monotone, clamps)


def profile_weight(w, domain, samples=64, rng_seed=None, alphas=DEFAULT_ALPHAS, tol=1e-6):
    """Doubling, homogeneity and annular-decay fits combined into one record."""
    exponents = estimate_doubling(w, domain, samples=samples, rng_seed=rng_seed, tol=tol)
    fit = estimate_annular_decay(
        w, domain, alphas=alphas, samples=max(samples // 4, 1), rng_seed=rng_seed,
        delta=exponents.delta, tol=min(tol, 1e-8),
    )
    exponents.sigma = fit.sigma
    exponents.sigma_constant = fit.constant
    exponents.residuals['sigma'] = fit.residual
    exponents.samples['annular'] = fit.samples
    exponents.clamps.extend(fit.clamps)
    return exponents


# ---------------------------------------------------------------------------
# Integrability of |x|^(-np + gamma)
# ---------------------------------------------------------------------------

@dataclass
class IntegrabilityReport:
    finite: bool
    threshold: float
    exponent: float
    partial_sums: list
    quadrature_verdict: str
    ratio: float

    def to_dict(self):
        return {
            'finite': self.finite,
            'threshold': self.threshold,
            'exponent': self.exponent,
            'partial_sums': self.partial_sums,
            'quadrature_verdict': self.quadrature_verdict,
            'ratio': self.ratio,
        }


def power_integrability(n, p, gamma, levels=16, tol=None):
    """
    Decide whether |x|^(-np + gamma) is integrable on the unit ball.

    The integral is finite exactly when gamma > n(p - 1). As a cross-check
    the integral over the punctured balls B minus B(0, 2^-j) is computed in
    polar form, shell by shell, and the shell increments are fed to the
    ratio test.

    Raises:
        ValidationError: If p < 1 or gamma <= -n
    """
    validate_exponent(p)
    validate_power_gamma(gamma, n=n)
    from .porosity import divergence_test

    power = -n * p + gamma
    sphere = 2 * math.pi ** (n / 2) / special.gamma(n / 2)
    increments = []
    for j in range(levels):
        value, _ = integrate.quad(lambda r: r ** (power + n - 1), 2.0 ** (-j - 1), 2.0 ** -j)
        increments.append(sphere * value)
    partial_sums = list(np.cumsum(increments))
    verdict = divergence_test(increments, tol=tol)
    return IntegrabilityReport(
        finite=gamma > n * (p - 1),
        threshold=float(n * (p - 1)),
        exponent=float(power),
        partial_sums=[float(s) for s in partial_sums],
        quadrature_verdict=verdict.verdict,
        ratio=verdict.ratio,
    )
