"""
Middle-interval Cantor sets on the x-axis, their square covers with rings,
and cover counts for product sets E x F.

Level k of the construction removes an open interval of length eta*tau^k
from the middle of each of the 2^(k-1) surviving intervals, so all level-k
intervals share the length

    l_k = (1 - eta*tau/(1 - 2 tau) * (1 - (2 tau)^k)) / 2^k.

Each level-k interval is the middle segment of a square whose horizontal
margins lie in the E-free gaps; the outer collar of that square is the ring.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .conf import resolve
from .geometry import Cube, Ring
from .validators import (
    validate_cantor_parameters,
    validate_min_count,
    validate_open_unit,
    validate_upsilon,
)
from .weights import measure_box, measure_ring

logger = logging.getLogger(__name__)

EXPLICIT_INTERVAL_CAP = 2 ** 17


@dataclass(frozen=True)
class CantorConfig:
    """
    Parameters of the middle-interval Cantor set E.

    Either ``tau`` or ``upsilon`` (tau = 2^-upsilon) may be given; when both
    are given they must agree.
    """

    eta: float
    tau: float | None = None
    levels: int = 8
    upsilon: float | None = None

    def __post_init__(self):
        if self.tau is None and self.upsilon is None:
            raise ValidationError(_('Give tau or upsilon.'), code='missing_tau')
        if self.upsilon is not None:
            validate_upsilon(self.upsilon)
            tau = 2.0 ** -self.upsilon
            if self.tau is not None and not math.isclose(self.tau, tau, rel_tol=1e-12):
                raise ValidationError(
                    _('tau=%(tau)s does not match 2^-upsilon=%(expected)s.'),
                    code='tau_upsilon_mismatch',
                    params={'tau': self.tau, 'expected': tau},
                )
            object.__setattr__(self, 'tau', tau)
        validate_cantor_parameters(self.eta, self.tau)
        validate_min_count(self.levels, 0, 'levels')

    @property
    def removal_constant(self):
        """eta*tau/(1 - 2 tau), the total removed length."""
        return self.eta * self.tau / (1 - 2 * self.tau)

    def exact(self):
        return Fraction(self.eta), Fraction(self.tau)

    def to_dict(self):
        return {'eta': self.eta, 'tau': self.tau, 'upsilon': self.upsilon, 'levels': self.levels}


def feasible_eta(eta, tau):
    """
    Removal scale usable with ``tau``.

    ``eta`` itself when eta*tau/(1 - 2 tau) < 1, otherwise (1 - 2 tau)/(2 tau),
    which removes half of [0, 1]. The porosity of E depends on tau alone.
    """
    validate_open_unit(eta)
    if not 0 < tau < 0.5:
        return eta
    if eta * tau / (1 - 2 * tau) < 1:
        return eta
    return (1 - 2 * tau) / (2 * tau)


@dataclass
class CantorLevel:
    """Surviving intervals of one level; ``lefts`` is None above the explicit cap."""

    k: int
    length: Fraction
    count: int
    lefts: np.ndarray | None
    removed: Fraction

    def intervals(self):
        if self.lefts is None:
            return None
        return np.stack([self.lefts, self.lefts + float(self.length)], axis=1)


def build_levels(cfg, explicit_cap=EXPLICIT_INTERVAL_CAP):
    """
    Simulate the removals for levels 0..cfg.levels.

    Lengths are exact fractions of the binary values of eta and tau. Left
    endpoints are kept as floats while the level has at most
    ``explicit_cap`` intervals.

    Returns:
        list[CantorLevel]
    """
    eta, tau = cfg.exact()
    length = Fraction(1)
    removed = Fraction(0)
    lefts = np.zeros(1)
    levels = [CantorLevel(0, length, 1, lefts, removed)]
    for k in range(1, cfg.levels + 1):
        gap = eta * tau ** k
        length = (length - gap) / 2
        removed += 2 ** (k - 1) * gap
        if lefts is not None and 2 ** k <= explicit_cap:
            lefts = np.sort(np.concatenate([lefts, lefts + float(length + gap)]))
        else:
            lefts = None
        levels.append(CantorLevel(k, length, 2 ** k, lefts, removed))
    return levels


def level_length(cfg, k):
    """Closed form of the common length l_k of the level-k intervals."""
    validate_min_count(k, 0, 'k')
    return (1 - cfg.removal_constant * (1 - (2 * cfg.tau) ** k)) / 2 ** k


def removed_length(cfg, k=None):
    """Total length removed up to level k, or in the limit when k is None."""
    if k is None:
        return cfg.removal_constant
    eta, tau = cfg.exact()
    return float(eta * tau * (1 - (2 * tau) ** k) / (1 - 2 * tau))


# ---------------------------------------------------------------------------
# Covers
# ---------------------------------------------------------------------------

RING_MODES = ('margin', 'half')


@dataclass
class CoverLevel:
    """
    Congruent squares covering level k, with their common ring thickness.

    ``centers`` holds the square centers when the level is explicit; mu_R and
    mu_Q are scalars for translation-invariant weights and per-cube arrays
    otherwise, None until ``measure_level`` has run.
    """

    k: int
    count: int
    side: float
    width: float
    alpha: float
    interval_length: float
    margin: float
    centers: np.ndarray | None = None
    mu_R: object = None
    mu_Q: object = None
    flags: list = field(default_factory=list)
    interval_gap: float | None = None
    cube_gap: float | None = None
    hypothesis_assumed: bool = False

    @property
    def ell_Q(self):
        return self.side

    def cubes(self):
        if self.centers is None:
            return None
        return [Cube(tuple(c), self.side) for c in self.centers]

    def rings(self):
        cubes = self.cubes()
        return None if cubes is None else [Ring(c, self.alpha) for c in cubes]

    def to_dict(self, include_cubes=True):
        data = {
            'k': self.k,
            'count': self.count,
            'side': self.side,
            'ring_width': self.width,
            'alpha': self.alpha,
            'interval_length': self.interval_length,
            'margin': self.margin,
            'flags': list(self.flags),
            'interval_gap': self.interval_gap,
            'cube_gap': self.cube_gap,
            'hypothesis_assumed': self.hypothesis_assumed,
            'mu_R': _scalar_or_list(self.mu_R),
            'mu_Q': _scalar_or_list(self.mu_Q),
        }
        if include_cubes and self.centers is not None:
            data['centers'] = self.centers.tolist()
        return data


def _scalar_or_list(value):
    if value is None or np.isscalar(value):
        return value
    return np.asarray(value).tolist()


def _ring_geometry(cfg, k, interval_length, ring_fraction, mode, safety):
    ring_fraction = Fraction(ring_fraction).limit_denominator(10 ** 6)
    scale = cfg.eta * cfg.tau ** k
    margin = float(ring_fraction) * scale
    side = interval_length + 2 * margin
    flags = []
    if mode == 'margin':
        width = margin * safety
    elif mode == 'half':
        width = scale / 2 * safety
        if width > margin:
            flags.append('ring_meets_set')
    else:
        raise ValidationError(
            _('Unknown ring mode %(mode)s.'), code='bad_ring_mode', params={'mode': mode}
        )
    if 2 * width >= side:
        raise ValidationError(_('Ring thickness exceeds half the square.'), code='ring_too_thick')
    alpha = 2 * width / side
    return side, width, alpha, margin, flags


def _min_gap(sorted_positions, side):
    if len(sorted_positions) < 2:
        return None
    return float(np.min(np.diff(sorted_positions)) - side)


def covers(cfg, k, ring_fraction=Fraction(1, 3), mode='margin', safety=None, levels=None):
    """
    Square cover of level k of E.

    The square over an interval I_j has side l_k + 2*ring_fraction*eta*tau^k
    and is centred on the x-axis. The ring thickness is
    ring_fraction*eta*tau^k*safety, with safety defaulting to 1 - tau so
    that the level-(k+1) squares sit inside (1 - alpha_k) times their parent.
    alpha_k = 2 * thickness / side.

    Raises:
        ValidationError: If squares overlap or the ring is too thick
    """
    validate_min_count(k, 0, 'k')
    safety = 1 - cfg.tau if safety is None else safety
    if safety != 1:
        validate_open_unit(safety)
    if levels is None or len(levels) <= k:
        levels = build_levels(replace(cfg, levels=max(k, cfg.levels)))
    level = levels[k]
    length = float(level.length)
    side, width, alpha, margin, flags = _ring_geometry(cfg, k, length, ring_fraction, mode, safety)

    centers = None
    interval_gap = cube_gap = None
    if level.lefts is not None:
        mids = level.lefts + length / 2
        centers = np.stack([mids, np.zeros_like(mids)], axis=1)
        interval_gap = _min_gap(level.lefts, length)
        cube_gap = _min_gap(mids, side)
        if cube_gap is not None and cube_gap <= 0:
            raise ValidationError(
                _('Level %(k)s squares overlap (gap %(gap)s).'),
                code='overlapping_cubes',
                params={'k': k, 'gap': cube_gap},
            )
    for flag in flags:
        logger.warning(f"Cantor cover level {k}: {flag}", extra={'k': k, 'mode': mode})
    return CoverLevel(
        k=k,
        count=level.count,
        side=side,
        width=width,
        alpha=alpha,
        interval_length=length,
        margin=margin,
        centers=centers,
        flags=flags,
        interval_gap=interval_gap,
        cube_gap=cube_gap,
    )


def cover_levels(cfg, ks=None, **options):
    """Covers for every level in ``ks`` (default 1..cfg.levels), sharing one simulation."""
    ks = list(range(1, cfg.levels + 1)) if ks is None else list(ks)
    levels = build_levels(replace(cfg, levels=max(ks + [cfg.levels])))
    return [covers(cfg, k, levels=levels, **options) for k in ks]


def check_nesting(cfg, k, **options):
    """
    Check that every level-(k+1) square lies in (1 - alpha_k) times its parent.

    Returns:
        dict: ``ok`` and the smallest containment margin, zero when a child
        touches the closed (1 - alpha_k) square and negative on failure
    """
    levels = build_levels(replace(cfg, levels=max(k + 1, cfg.levels)))
    parent = covers(cfg, k, levels=levels, **options)
    child = covers(cfg, k + 1, levels=levels, **options)
    if parent.centers is None or child.centers is None:
        raise ValidationError(_('Nesting check needs explicit levels.'), code='level_not_explicit')
    inner_half = parent.side * (1 - parent.alpha) / 2
    owner = np.arange(child.count) // 2
    offsets = np.abs(child.centers - parent.centers[owner]).max(axis=1)
    margins = inner_half - (offsets + child.side / 2)
    worst = float(margins.min())
    return {'ok': worst >= -1e-12 * parent.side, 'worst_margin': worst, 'k': k}


def ring_free_check(cfg, k, K, **options):
    """
    Count level-K intervals that meet the horizontal ring collars of level k.

    The collar of a square around I_j meets the x-axis in two segments of
    length equal to the ring thickness; K > k refines E.
    """
    if K <= k:
        raise ValidationError(_('K must exceed k.'), code='bad_levels')
    levels = build_levels(replace(cfg, levels=K))
    level = covers(cfg, k, levels=levels, **options)
    fine = levels[K]
    if level.centers is None or fine.lefts is None:
        raise ValidationError(_('Ring check needs explicit levels.'), code='level_not_explicit')
    fine_lo = fine.lefts
    fine_hi = fine.lefts + float(fine.length)
    hits = 0
    half = level.side / 2
    for x in level.centers[:, 0]:
        for lo, hi in ((x - half, x - half + level.width), (x + half - level.width, x + half)):
            start = np.searchsorted(fine_hi, lo, side='right')
            stop = np.searchsorted(fine_lo, hi, side='left')
            hits += max(int(stop - start), 0)
    return hits


def measure_level(level, w, tol=None):
    """
    Fill in mu(R) and mu(Q) for the squares of a cover level.

    A translation-invariant weight is measured once on a square at the
    origin; other weights need explicit squares.
    """
    tol = resolve(tol, 'QUAD_TOL')
    if w.translation_invariant:
        cube = Cube((0.0, 0.0), level.side)
        mu_Q = measure_box(w, cube, tol=tol).value
        mu_R = measure_ring(w, Ring(cube, level.alpha), tol=tol).value
    else:
        cubes = level.cubes()
        if cubes is None:
            raise ValidationError(
                _('Level %(k)s has too many squares to measure individually.'),
                code='level_not_explicit',
                params={'k': level.k},
            )
        mu_Q = np.array([measure_box(w, c, tol=tol).value for c in cubes])
        mu_R = np.array([measure_ring(w, Ring(c, level.alpha), tol=tol).value for c in cubes])
    return replace(level, mu_R=mu_R, mu_Q=mu_Q)


def union_mass(level):
    """mu of the union of the squares (they are disjoint)."""
    if level.mu_Q is None:
        raise ValidationError(_('Measure the level first.'), code='level_not_measured')
    if np.isscalar(level.mu_Q):
        return level.count * level.mu_Q
    return math.fsum(level.mu_Q)


# ---------------------------------------------------------------------------
# Products E x F
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProductConfig:
    """
    E x F with E from ``base`` and F covered by at most C * lambda^k intervals.

    Without ``f_counts`` F is the synthetic subset of E that keeps both
    children at level k exactly when floor(omega*k) > floor(omega*(k-1)), so
    it needs 2^floor(omega*k) <= lambda^k intervals. ``f_counts`` supplies
    the counts of a user's F instead; the covering hypothesis is then assumed.
    """

    base: CantorConfig
    omega: float = 0.0
    cover_constant: float = 1.0
    f_counts: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.omega < 1:
            raise ValidationError(
                _('omega=%(omega)s must lie in [0, 1).'), code='omega_range', params={'omega': self.omega}
            )
        if self.cover_constant <= 0:
            raise ValidationError(_('The cover constant must be positive.'), code='bad_cover_constant')

    @property
    def lam(self):
        return 2.0 ** self.omega

    def f_count(self, k):
        if self.f_counts is not None:
            return int(self.f_counts[k - 1])
        return 2 ** math.floor(self.omega * k)

    def to_dict(self):
        return {
            'base': self.base.to_dict(),
            'omega': self.omega,
            'lambda': self.lam,
            'cover_constant': self.cover_constant,
            'f_counts': None if self.f_counts is None else list(self.f_counts),
        }


def synthetic_f_lefts(pcfg, k, levels):
    """Left endpoints of the synthetic F intervals at level k."""
    lefts = np.zeros(1)
    for j in range(1, k + 1):
        length = float(levels[j].length)
        gap = float(levels[j - 1].length) - 2 * length
        right = lefts + length + gap
        if math.floor(pcfg.omega * j) > math.floor(pcfg.omega * (j - 1)):
            lefts = np.sort(np.concatenate([lefts, right]))
    return lefts


def product_covers(pcfg, k, explicit_cap=None, **options):
    """
    Square cover of level k of E x F.

    Returns:
        CoverLevel: count 2^k * N_k(F) with the E-cover's side and ring;
        explicit centers for synthetic F when the count is below the cap
    """
    explicit_cap = resolve(explicit_cap, 'CUBE_CAP')
    cfg = pcfg.base
    levels = build_levels(replace(cfg, levels=max(k, cfg.levels)))
    base = covers(cfg, k, levels=levels, **options)
    f_count = pcfg.f_count(k)
    bound = pcfg.cover_constant * pcfg.lam ** k
    level = replace(base, count=base.count * f_count, centers=None)
    if pcfg.f_counts is not None:
        level.hypothesis_assumed = True
        if f_count > bound * (1 + 1e-12):
            level.flags.append('f_count_exceeds_bound')
            logger.warning(
                f"F count {f_count} at level {k} exceeds C*lambda^k={bound:.6g}",
                extra={'k': k, 'f_count': f_count},
            )
        return level

    if base.centers is not None and level.count <= explicit_cap:
        f_mids = synthetic_f_lefts(pcfg, k, levels) + base.interval_length / 2
        xs = base.centers[:, 0]
        X, Y = np.meshgrid(xs, f_mids, indexing='ij')
        level.centers = np.stack([X.ravel(), Y.ravel()], axis=1)
        if len(f_mids) > 1:
            f_gap = _min_gap(f_mids, base.interval_length)
            gaps = [g for g in (base.interval_gap, f_gap) if g is not None]
            level.interval_gap = min(gaps)
            cube_gaps = [g for g in (base.cube_gap, _min_gap(f_mids, base.side)) if g is not None]
            level.cube_gap = min(cube_gaps)
    return level


def product_count_bound(pcfg, k):
    """C * (2 lambda)^k = C * 2^((1 + omega) k)."""
    return pcfg.cover_constant * 2.0 ** ((1 + pcfg.omega) * k)
