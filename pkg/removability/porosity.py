"""
The (s,p)-porosity criterion and its sufficient and closed-form versions.

For a sequence of cover levels Q_k the criterion terms are

    t_k = (sum_{Q in Q_k} alpha_Q^(-s c1/(s-1)) mu(R_Q)^((s-p)/((s-1)p)))^(1-s)

and the set is (s,p)-porous when sum_k t_k diverges. Terms are evaluated in
the log domain. Divergence is decided by a ratio test with an explicit
inconclusive band; the raw terms always ship with the verdict.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _
from scipy.special import logsumexp

from .conf import get_setting, resolve
from .validators import (
    validate_c1,
    validate_exponent,
    validate_exponent_pair,
    validate_min_count,
    validate_structural_exponents,
    validate_upsilon,
)

logger = logging.getLogger(__name__)

CRITERIA = ('exact-mu(R)', 'sufficient-mu(Q)', 'sufficient-l(Q)', 'sufficient-l(R)', 'closed-form')


@dataclass(frozen=True)
class PorosityQuery:
    """
    Exponents of one porosity question with the provenance of c1, delta, sigma.

    delta and sigma may be None when only the exact criterion is evaluated.
    """

    s: float
    p: float
    c1: float = 1.0
    delta: float | None = None
    sigma: float | None = None
    n: int = 2
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        validate_exponent_pair(self.s, self.p)
        validate_c1(self.c1)
        if self.delta is not None and self.sigma is not None:
            validate_structural_exponents(self.delta, self.sigma, self.n)
        elif self.delta is not None and not 0 < self.delta <= self.n:
            raise ValidationError(
                _('delta=%(d)s must lie in (0, %(n)s].'),
                code='delta_range',
                params={'d': self.delta, 'n': self.n},
            )
        elif self.sigma is not None and not 0 < self.sigma <= 1:
            raise ValidationError(
                _('sigma=%(s)s must lie in (0, 1].'), code='sigma_range', params={'s': self.sigma}
            )

    @property
    def alpha_exponent(self):
        return -self.s * self.c1 / (self.s - 1)

    @property
    def mass_exponent(self):
        return (self.s - self.p) / ((self.s - 1) * self.p)

    def to_dict(self):
        return {
            's': self.s,
            'p': self.p,
            'c1': self.c1,
            'delta': self.delta,
            'sigma': self.sigma,
            'n': self.n,
        }


@dataclass
class LevelData:
    """Ring data of one cover level: cube count, alpha and masses (scalars or per cube)."""

    k: int
    count: int
    alpha: object
    mu_R: object = None
    mu_Q: object = None
    side: object = None


@dataclass
class TermSeries:
    """Criterion terms of a level sequence, kept as natural logarithms."""

    ks: list
    log_terms: np.ndarray
    criterion: str
    provenance: dict = field(default_factory=dict)

    @property
    def terms(self):
        with np.errstate(over='ignore', under='ignore'):
            return np.exp(self.log_terms)


@dataclass
class DivergenceVerdict:
    verdict: str
    ratio: float | None
    tail_terms: int
    tol: float

    def to_dict(self):
        return {'verdict': self.verdict, 'ratio': self.ratio, 'tail_terms': self.tail_terms, 'tol': self.tol}


def _log_inner(q, count, alpha, log_mass):
    """log of sum over cubes of alpha^a * exp(log_mass)^b, with scalar data repeated count times."""
    log_alpha = np.log(np.asarray(alpha, dtype=float))
    log_mass = np.asarray(log_mass, dtype=float)
    pieces = q.alpha_exponent * log_alpha + q.mass_exponent * log_mass
    if np.ndim(pieces) == 0:
        return math.log(count) + float(pieces)
    pieces = np.broadcast_to(pieces, (count,))
    return float(logsumexp(pieces))


def _series(levels, q, log_mass_of, criterion, provenance=None):
    ks, logs = [], []
    for level in levels:
        log_inner = _log_inner(q, level.count, level.alpha, log_mass_of(level))
        ks.append(level.k)
        logs.append((1 - q.s) * log_inner)
    return TermSeries(ks, np.asarray(logs), criterion, provenance or {})


def _require(level, name, hint):
    value = getattr(level, name, None)
    if value is None:
        raise ValidationError(
            _('Level %(k)s has no %(name)s; %(hint)s.'),
            code=f'missing_{name}',
            params={'k': level.k, 'name': name, 'hint': hint},
        )
    value = np.asarray(value, dtype=float)
    if np.any(value <= 0):
        raise ValidationError(
            _('Level %(k)s has a non-positive %(name)s.'),
            code=f'nonpositive_{name}',
            params={'k': level.k, 'name': name},
        )
    return value


def criterion_terms(levels, q):
    """
    Exact criterion terms from per-cube alpha_Q and mu(R_Q).

    Raises:
        ValidationError: If a level has no mu(R); run cantor.measure_level or
            weights.measure_ring first
    """
    return _series(
        levels,
        q,
        lambda level: np.log(_require(level, 'mu_R', 'measure the rings with measure_ring')),
        'exact-mu(R)',
    )


def divergence_test(terms, tol=None, log=False, min_tail=None, min_horizon=None):
    """
    Ratio test on the tail of a positive series.

    The fitted ratio is the geometric mean of t_(k+1)/t_k over the last half
    of the terms. The series diverges when the ratio is at least 1 + tol, or
    within tol of 1 while the last term has not decayed below the start of
    the tail; it converges when the ratio is at most 1 - tol.

    Args:
        terms: Positive terms, or their logarithms when ``log`` is set
        tol: Width of the inconclusive band (default RATIO_TOL)

    Raises:
        ValidationError: If fewer than MIN_HORIZON terms are given
    """
    tol = resolve(tol, 'RATIO_TOL')
    min_tail = resolve(min_tail, 'MIN_TAIL_TERMS')
    min_horizon = resolve(min_horizon, 'MIN_HORIZON')
    values = np.asarray(terms, dtype=float)
    validate_min_count(len(values), min_horizon, 'Horizon K')
    if log:
        log_terms = values
    else:
        if np.any(values <= 0):
            raise ValidationError(_('Series terms must be positive.'), code='nonpositive_terms')
        log_terms = np.log(values)

    steps = np.diff(log_terms)
    tail = steps[len(steps) // 2:]
    if len(tail) < min_tail:
        return DivergenceVerdict('inconclusive', None, len(tail), tol)
    ratio = math.exp(float(np.mean(tail)))
    start = len(log_terms) - len(tail) - 1
    not_decaying = log_terms[-1] >= log_terms[start] + math.log1p(-tol)
    if ratio >= 1 + tol or (abs(ratio - 1) <= tol and not_decaying):
        verdict = 'diverges'
    elif ratio <= 1 - tol:
        verdict = 'converges'
    else:
        verdict = 'inconclusive'
    return DivergenceVerdict(verdict, ratio, len(tail), tol)


def sufficient_measureQ(levels, q, sigma=None):
    """
    Terms with mu(R) replaced by alpha^sigma mu(Q).

    Without a sigma (argument or query) the homogeneity bound
    sigma = delta + 1 - n is used and recorded as the provenance.
    """
    sigma = sigma if sigma is not None else q.sigma
    provenance = {'sigma': 'query' if sigma is not None else 'homogeneity-bound'}
    if sigma is None:
        if q.delta is None:
            raise ValidationError(
                _('sufficient_measureQ needs sigma or delta.'), code='missing_sigma'
            )
        sigma = q.delta + 1 - q.n
        if sigma <= 0:
            raise ValidationError(
                _('The homogeneity bound gives sigma=%(s)s <= 0.'),
                code='sigma_range',
                params={'s': sigma},
            )

    def log_mass(level):
        alpha = np.asarray(level.alpha, dtype=float)
        return sigma * np.log(alpha) + np.log(_require(level, 'mu_Q', 'measure the cubes first'))

    return _series(levels, q, log_mass, 'sufficient-mu(Q)', provenance)


def _check_delta_sigma(q):
    if q.delta is None or q.sigma is None:
        raise ValidationError(_('This criterion needs delta and sigma.'), code='missing_exponents')


def sufficient_lengthQ(levels, q, delta_by_cube=None):
    """
    Terms with mu(R) replaced by alpha^sigma l(Q)^delta.

    ``delta_by_cube`` maps a side length to a cube-dependent delta_Q.
    """
    _check_delta_sigma(q)

    def log_mass(level):
        alpha = np.asarray(level.alpha, dtype=float)
        side = _require(level, 'side', 'cover levels carry their side')
        delta = q.delta if delta_by_cube is None else np.vectorize(delta_by_cube)(side)
        return q.sigma * np.log(alpha) + delta * np.log(side)

    return _series(levels, q, log_mass, 'sufficient-l(Q)')


def sufficient_lengthR(levels, q):
    """The same terms written as alpha^(sigma - delta) l(R)^delta with l(R) = alpha l(Q)."""
    _check_delta_sigma(q)

    def log_mass(level):
        alpha = np.asarray(level.alpha, dtype=float)
        length_r = alpha * _require(level, 'side', 'cover levels carry their side')
        return (q.sigma - q.delta) * np.log(alpha) + q.delta * np.log(length_r)

    return _series(levels, q, log_mass, 'sufficient-l(R)')


# ---------------------------------------------------------------------------
# Closed forms for the Cantor family
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedForm:
    satisfied: bool
    lhs: float

    def to_dict(self):
        return {'satisfied': self.satisfied, 'lhs': self.lhs}


def _closed_form_lhs(upsilon, s, p, c1, delta, sigma, omega):
    gap = (s - p) / p
    return (1 + omega) * (1 - s) + (1 - upsilon) * (s * c1 + (delta - sigma) * gap) + upsilon * delta * gap


def cantor_closed_form(upsilon, s, p, c1, delta, sigma):
    """
    Affine porosity condition for the Cantor set with tau = 2^-upsilon.

    The lhs is the base-2 logarithm of the asymptotic ratio of consecutive
    criterion terms; lhs >= 0 (boundary included) means the set is porous.
    """
    validate_upsilon(upsilon)
    validate_exponent_pair(s, p)
    lhs = _closed_form_lhs(upsilon, s, p, c1, delta, sigma, 0.0)
    return ClosedForm(lhs >= 0, lhs)


def product_closed_form(upsilon, omega, s, p, c1, delta, sigma):
    """The condition for E x F, F covered by C * (2^omega)^k intervals; omega=0 gives the Cantor form."""
    validate_upsilon(upsilon)
    validate_exponent_pair(s, p)
    if omega < 0:
        raise ValidationError(_('omega must be non-negative.'), code='omega_range')
    lhs = _closed_form_lhs(upsilon, s, p, c1, delta, sigma, omega)
    return ClosedForm(lhs >= 0, lhs)


def ratio_closed_form(upsilon, s, p, c1, delta, sigma, omega=0.0):
    """
    Asymptotic ratio t_(k+1)/t_k of the Cantor family as a product of powers:

        2^((1+omega)(1-s)) * (2 tau)^(s c1 - sigma (s-p)/p) * 2^(delta (s-p)/p)

    Its base-2 logarithm equals the closed-form lhs.
    """
    tau = 2.0 ** -upsilon
    gap = (s - p) / p
    log_ratio = (
        (1 + omega) * (1 - s) * math.log(2)
        + (s * c1 - sigma * gap) * math.log(2 * tau)
        + delta * gap * math.log(2)
    )
    return math.exp(log_ratio)


@dataclass
class FeasibleRegion:
    upsilons: np.ndarray
    ss: np.ndarray
    mask: np.ndarray
    nonempty: bool
    s_max: float
    extended: bool
    inconsistent: bool
    expected_nonempty: bool

    def to_dict(self):
        return {
            'upsilon': self.upsilons.tolist(),
            's': self.ss.tolist(),
            'nonempty': self.nonempty,
            's_max': self.s_max,
            'extended': self.extended,
            'inconsistent': self.inconsistent,
            'expected_nonempty': self.expected_nonempty,
            'feasible_count': int(self.mask.sum()),
        }


def _region_grid(p, upsilon_max, s_max, points):
    upsilons = 1 + (upsilon_max - 1) * np.linspace(1, points, points) / points
    upsilons = np.concatenate([[1 + 1e-3], upsilons])
    ss = p + (s_max - p) * np.linspace(1, points, points) / points
    return upsilons, ss


def feasible_region(p, c1, delta, sigma, omega=0.0, upsilon_max=4.0, s_max=8.0, points=40,
                    s_max_cap=None):
    """
    Closed-form feasibility mask over a (upsilon, s) grid.

    upsilon runs over (1, upsilon_max] with an extra point at 1 + 1e-3 and
    s over (p, s_max]. When delta/p > 1 + omega the region must be nonempty
    for large s near upsilon = 1, so an empty mask doubles s_max up to the
    cap; an empty mask at the cap is flagged as an inconsistency.

    Returns:
        FeasibleRegion: mask indexed [upsilon, s]
    """
    validate_exponent(p)
    s_max_cap = resolve(s_max_cap, 'S_MAX_CAP')
    if s_max <= p:
        raise ValidationError(_('s_max must exceed p.'), code='s_max_too_small')
    expected = delta / p > 1 + omega
    extended = False
    while True:
        upsilons, ss = _region_grid(p, upsilon_max, s_max, points)
        U, S = np.meshgrid(upsilons, ss, indexing='ij')
        mask = _closed_form_lhs(U, S, p, c1, delta, sigma, omega) >= 0
        if mask.any() or not expected or s_max * 2 > s_max_cap:
            break
        s_max *= 2
        extended = True
    inconsistent = expected and not mask.any()
    if inconsistent:
        logger.warning(
            f"No feasible (upsilon, s) up to s_max={s_max:g} although delta/p > 1 + omega",
            extra={'p': p, 'delta': delta, 'omega': omega},
        )
    return FeasibleRegion(upsilons, ss, mask, bool(mask.any()), s_max, extended, inconsistent, expected)


def lowered_exponent_query(p, epsilon, c1=1.0, delta=None, sigma=None, provenance=None):
    """The (p, p - epsilon) query: s = p and p replaced by p - epsilon."""
    if not 0 < epsilon <= p - 1:
        raise ValidationError(
            _('epsilon=%(e)s must lie in (0, p - 1].'), code='epsilon_range', params={'e': epsilon}
        )
    return PorosityQuery(p, p - epsilon, c1, delta, sigma, provenance=provenance or {})


def monotonicity_spot_check(c1, delta, sigma, samples=200, rng_seed=None, step=0.25, omega=0.0):
    """
    Sample closed-form tuples and test that porosity persists when s grows
    or p shrinks. Violations are reported, never raised.
    """
    rng = np.random.default_rng(resolve(rng_seed, 'SEED'))
    violations = {'s': [], 'p': []}
    checked = 0
    for _ in range(samples):
        upsilon = rng.uniform(1.01, 4.0)
        p = rng.uniform(1.0, 3.0)
        s = p + rng.uniform(0.05, 6.0)
        if _closed_form_lhs(upsilon, s, p, c1, delta, sigma, omega) < 0:
            continue
        checked += 1
        tuple_ = {'upsilon': upsilon, 's': s, 'p': p}
        if _closed_form_lhs(upsilon, s + step, p, c1, delta, sigma, omega) < 0:
            violations['s'].append(tuple_)
        lower_p = max(1.0, p - step)
        if lower_p < p and _closed_form_lhs(upsilon, s, lower_p, c1, delta, sigma, omega) < 0:
            violations['p'].append(tuple_)
    if violations['s'] or violations['p']:
        logger.info(
            f"Monotonicity spot check: {len(violations['s'])} s- and "
            f"{len(violations['p'])} p-violations out of {checked} porous tuples"
        )
    return {'checked': checked, 'violations': violations}


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class PorosityReport:
    query: PorosityQuery
    criterion_used: str
    series: TermSeries | None
    verdict: DivergenceVerdict | None
    closed_form: ClosedForm | None = None
    provenance: dict = field(default_factory=dict)

    def to_dict(self):
        data = {
            'schema_version': get_setting('SCHEMA_VERSION'),
            'query': self.query.to_dict(),
            'criterion_used': self.criterion_used,
            'provenance': {**self.query.provenance, **self.provenance},
        }
        if self.series is not None:
            data['k'] = list(self.series.ks)
            data['log_t_k'] = [float(v) for v in self.series.log_terms]
            data['t_k'] = [float(v) for v in self.series.terms]
            data['provenance'].update(self.series.provenance)
        if self.verdict is not None:
            data['verdict'] = self.verdict.verdict
            data['ratio'] = self.verdict.ratio
        if self.closed_form is not None:
            data['closed_form'] = self.closed_form.to_dict()
            if self.verdict is None:
                data['verdict'] = 'diverges' if self.closed_form.satisfied else 'not-certified'
        return data


CRITERION_FUNCTIONS = {
    'exact-mu(R)': criterion_terms,
    'sufficient-mu(Q)': sufficient_measureQ,
    'sufficient-l(Q)': sufficient_lengthQ,
    'sufficient-l(R)': sufficient_lengthR,
}


def build_report(levels, q, criterion='exact-mu(R)', tol=None, provenance=None):
    """Evaluate one criterion on the levels and run the divergence test."""
    if criterion not in CRITERION_FUNCTIONS:
        raise ValidationError(
            _('Unknown criterion %(c)s.'), code='unknown_criterion', params={'c': criterion}
        )
    series = CRITERION_FUNCTIONS[criterion](levels, q)
    verdict = divergence_test(series.log_terms, tol=tol, log=True)
    logger.info(
        f"Porosity {criterion} s={q.s} p={q.p} c1={q.c1:.4f}: {verdict.verdict} "
        f"(ratio {verdict.ratio})",
        extra={'query': q.to_dict()},
    )
    return PorosityReport(q, criterion, series, verdict, provenance=provenance or {})


def closed_form_report(upsilon, q, omega=0.0, provenance=None):
    """Report for the closed-form mode; no quadrature is performed."""
    _check_delta_sigma(q)
    form = product_closed_form(upsilon, omega, q.s, q.p, q.c1, q.delta, q.sigma)
    return PorosityReport(q, 'closed-form', None, None, form, provenance=provenance or {})
