"""
Toolkit settings lookup.

Values come from ``settings.REMOVABILITY`` when present and fall back to the
defaults below, so the library also works under a bare ``settings.configure()``.
"""

from django.conf import settings

DEFAULTS = {
    'SEED': 20240601,
    'QUAD_TOL': 1e-8,
    'QUAD_COARSE_TOL': 1e-4,
    'QUAD_MAX_EVALUATIONS': 4_000_000,
    'GAUSS_ORDER': 8,
    'CUBE_CAP': 200_000,
    'WHITNEY_KAPPA': 9 / 8,
    'WHITNEY_I_CAP': 6,
    'CONNECTOR_DILATION': 1.0,
    'GRID_RESOLUTION': 256,
    'CONVOLUTION_EPSILON': 0.5,
    'RATIO_TOL': 0.02,
    'MIN_TAIL_TERMS': 4,
    'MIN_HORIZON': 8,
    'S_MAX_CAP': 512.0,
    'SCHEMA_VERSION': '1.0',
}


def get_setting(name):
    """
    Return a toolkit setting.

    Args:
        name: Key of the ``REMOVABILITY`` settings dictionary

    Returns:
        The configured value, or the built-in default

    Raises:
        KeyError: If the name is not a known setting
    """
    overrides = getattr(settings, 'REMOVABILITY', {})
    if name in overrides:
        return overrides[name]
    return DEFAULTS[name]


def resolve(value, name):
    """Return ``value`` unless it is None, in which case the setting ``name``."""
    return get_setting(name) if value is None else value
