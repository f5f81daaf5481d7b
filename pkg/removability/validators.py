"""
Custom validators for the removability toolkit.

Each validator checks one rule, returns the validated value and raises
``ValidationError`` otherwise, so they can be used both from library code
and as ``django.forms`` field validators.
"""

import logging
import math

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

logger = logging.getLogger(__name__)


def validate_finite(value):
    """
    Validate that a number is finite.

    Args:
        value: The number to validate

    Returns:
        float: The validated value

    Raises:
        ValidationError: If the value is NaN or infinite
    """
    if value is None or not math.isfinite(value):
        raise ValidationError(_('Value must be a finite number.'), code='not_finite')
    return value


def validate_positive(value):
    """
    Validate a strictly positive number (lengths, tolerances).

    Args:
        value: The number to validate

    Returns:
        float: The validated value

    Raises:
        ValidationError: If the value is not > 0
    """
    validate_finite(value)
    if value <= 0:
        raise ValidationError(_('Value must be positive.'), code='not_positive')
    return value


def validate_open_unit(value):
    """
    Validate a relative ring thickness or similar quantity in (0, 1).

    Args:
        value: The number to validate

    Returns:
        float: The validated value

    Raises:
        ValidationError: If the value is outside the open unit interval
    """
    validate_finite(value)
    if not 0 < value < 1:
        raise ValidationError(
            _('Value %(value)s must lie strictly between 0 and 1.'),
            code='not_in_unit_interval',
            params={'value': value},
        )
    return value


def validate_below_half(alpha):
    """
    Validate a ring thickness that still admits a doubling step.

    Args:
        alpha: Relative ring thickness

    Returns:
        float: The validated thickness

    Raises:
        ValidationError: If alpha >= 1/2; the caller must use the final half-step
    """
    validate_open_unit(alpha)
    if alpha >= 0.5:
        raise ValidationError(
            _('Ring thickness %(alpha)s is at least 1/2; use the final half-step extension.'),
            code='alpha_too_large',
            params={'alpha': alpha},
        )
    return alpha


def validate_at_least_half(alpha):
    """Validate a ring thickness for the final half-step (1/2 <= alpha < 1)."""
    validate_open_unit(alpha)
    if alpha < 0.5:
        raise ValidationError(
            _('The half-step extension needs a ring thickness of at least 1/2, got %(alpha)s.'),
            code='alpha_too_small',
            params={'alpha': alpha},
        )
    return alpha


def validate_exponent(p):
    """
    Validate a Lebesgue/Sobolev exponent p >= 1.

    Args:
        p: The exponent

    Returns:
        float: The validated exponent

    Raises:
        ValidationError: If p < 1
    """
    validate_finite(p)
    if p < 1:
        raise ValidationError(
            _('Exponent %(p)s must be at least 1.'), code='exponent_too_small', params={'p': p}
        )
    return p


def validate_exponent_pair(s, p):
    """
    Validate a porosity exponent pair s > p >= 1.

    Args:
        s: The larger (integrability) exponent
        p: The smaller exponent

    Returns:
        tuple: The validated pair

    Raises:
        ValidationError: If the pair is not ordered as s > p >= 1
    """
    validate_exponent(p)
    validate_finite(s)
    if s <= p:
        raise ValidationError(
            _('Porosity needs s > p, got s=%(s)s and p=%(p)s.'),
            code='s_not_above_p',
            params={'s': s, 'p': p},
        )
    return s, p


def validate_power_gamma(gamma, n=2):
    """
    Validate the exponent of a power weight |x|^gamma.

    Args:
        gamma: The power
        n: Dimension of the ambient space

    Returns:
        float: The validated power

    Raises:
        ValidationError: If gamma <= -n (the weight is not locally integrable)
    """
    validate_finite(gamma)
    if gamma <= -n:
        raise ValidationError(
            _('Power weight exponent %(gamma)s must exceed %(bound)s for local integrability.'),
            code='gamma_not_integrable',
            params={'gamma': gamma, 'bound': -n},
        )
    return gamma


def validate_distance_beta(beta, codimension):
    """
    Validate the exponent of a distance weight dist(x, F)^beta.

    Args:
        beta: The power
        codimension: Codimension of the singular set F (2 for points, 1 for segments)

    Returns:
        float: The validated power

    Raises:
        ValidationError: If the weight would not be locally integrable
    """
    validate_finite(beta)
    if beta <= -codimension:
        raise ValidationError(
            _('Distance weight exponent %(beta)s must exceed %(bound)s.'),
            code='beta_not_integrable',
            params={'beta': beta, 'bound': -codimension},
        )
    return beta


def validate_cantor_parameters(eta, tau):
    """
    Validate the parameters of the middle-interval Cantor construction.

    Args:
        eta: Removal scale, 0 < eta < 1
        tau: Removal ratio, 0 < tau < 1/2

    Returns:
        tuple: The validated pair

    Raises:
        ValidationError: If eta*tau/(1-2*tau) >= 1, i.e. the removals exhaust [0, 1]
    """
    validate_open_unit(eta)
    validate_finite(tau)
    if not 0 < tau < 0.5:
        raise ValidationError(
            _('Cantor ratio tau=%(tau)s must lie in (0, 1/2).'), code='tau_range', params={'tau': tau}
        )
    total = eta * tau / (1 - 2 * tau)
    if total >= 1:
        raise ValidationError(
            _('Removed length eta*tau/(1-2tau)=%(total)s must be below 1.'),
            code='removal_too_large',
            params={'total': total},
        )
    return eta, tau


def validate_upsilon(upsilon):
    """Validate upsilon > 1, so that tau = 2**-upsilon < 1/2."""
    validate_finite(upsilon)
    if upsilon <= 1:
        raise ValidationError(
            _('upsilon=%(u)s must exceed 1.'), code='upsilon_range', params={'u': upsilon}
        )
    return upsilon


def validate_structural_exponents(delta, sigma, n=2):
    """
    Validate weight exponents used by the porosity criteria.

    Args:
        delta: Upper homogeneity exponent, 0 < delta <= n
        sigma: Annular decay exponent, 0 < sigma <= 1
        n: Dimension

    Returns:
        tuple: The validated pair

    Raises:
        ValidationError: If a range or the bound delta + 1 - n <= sigma fails
    """
    validate_finite(delta)
    validate_finite(sigma)
    if not 0 < delta <= n:
        raise ValidationError(
            _('delta=%(d)s must lie in (0, %(n)s].'), code='delta_range', params={'d': delta, 'n': n}
        )
    if not 0 < sigma <= 1:
        raise ValidationError(
            _('sigma=%(s)s must lie in (0, 1].'), code='sigma_range', params={'s': sigma}
        )
    if delta + 1 - n > sigma + 1e-12:
        raise ValidationError(
            _('sigma=%(s)s must be at least delta + 1 - n = %(b)s.'),
            code='sigma_below_homogeneity',
            params={'s': sigma, 'b': delta + 1 - n},
        )
    return delta, sigma


def validate_c1(c1):
    """Validate the extension exponent c1 = log2(C1) >= 1."""
    validate_finite(c1)
    if c1 < 1:
        raise ValidationError(_('c1=%(c)s must be at least 1.'), code='c1_range', params={'c': c1})
    return c1


def validate_min_count(value, minimum, label):
    """
    Validate an integer count against a lower bound.

    Args:
        value: The count
        minimum: Smallest accepted count
        label: Name used in the error message

    Returns:
        int: The validated count

    Raises:
        ValidationError: If value < minimum
    """
    if value is None or int(value) != value or value < minimum:
        raise ValidationError(
            _('%(label)s must be an integer of at least %(min)s, got %(value)s.'),
            code='count_too_small',
            params={'label': label, 'min': minimum, 'value': value},
        )
    return int(value)
