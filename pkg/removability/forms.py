"""
Run configurations of the management commands.

Each command binds its flags (merged over an optional ``--config`` JSON file)
onto one of these forms and validates it before computing anything. Field
validators are the toolkit validators, so a bad flag and a bad library
argument fail the same way.
"""

import json
import logging

from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .conf import get_setting
from .porosity import CRITERIA, PorosityQuery, lowered_exponent_query
from .validators import (
    validate_exponent,
    validate_exponent_pair,
    validate_open_unit,
    validate_positive,
    validate_power_gamma,
    validate_upsilon,
)
from .weights import weight_from_config

logger = logging.getLogger(__name__)


class FloatListField(forms.Field):
    """
    Comma-separated floats on the command line, a JSON list in a config file.
    """

    def __init__(self, *, min_length=0, **kwargs):
        self.min_length = min_length
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, (int, float)):
            items = [value]
        elif isinstance(value, (list, tuple)):
            items = list(value)
        else:
            items = [v for v in str(value).strip('[]() ').split(',') if v.strip()]
        try:
            values = [float(v) for v in items]
        except (TypeError, ValueError):
            raise ValidationError(_('Enter a comma-separated list of numbers.'), code='bad_float_list')
        if len(values) < self.min_length:
            raise ValidationError(
                _('Enter at least %(n)s numbers.'), code='short_float_list', params={'n': self.min_length}
            )
        return values


class JSONField(forms.Field):
    """A JSON object given inline or as an already-parsed config value."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        if isinstance(value, (dict, list)):
            return value
        try:
            return json.loads(value)
        except ValueError:
            raise ValidationError(_('Enter valid JSON.'), code='bad_json')


WEIGHT_CHOICES = [
    ('constant', 'w = const'),
    ('const', 'w = const'),
    ('power', '|x - x0|^gamma'),
    ('axis', 'dist(x, axis)^beta'),
    ('distance', 'dist(x, points/segments)^beta'),
    ('json', 'structured weight from --weight-config'),
]


class RunConfig(forms.Form):
    """Fields shared by every command."""

    seed = forms.IntegerField(required=False, help_text='Random seed (default from settings).')
    output = forms.CharField(required=False, help_text='Write the JSON report here instead of stdout.')

    def clean_seed(self):
        seed = self.cleaned_data.get('seed')
        return get_setting('SEED') if seed is None else seed


class WeightConfig(forms.Form):
    weight = forms.ChoiceField(choices=WEIGHT_CHOICES, required=False, help_text='Weight kind.')
    gamma = forms.FloatField(required=False, validators=[validate_power_gamma], help_text='Power weight exponent.')
    beta = forms.FloatField(required=False, help_text='Axis or distance weight exponent.')
    axis = forms.IntegerField(required=False, min_value=0, max_value=1, help_text='Axis index for --weight axis.')
    offset = forms.FloatField(required=False, help_text='Axis offset for --weight axis.')
    center = FloatListField(required=False, help_text='Singular point x0 for --weight power.')
    points = FloatListField(required=False, help_text='Flattened point coordinates for --weight distance.')
    weight_config = JSONField(required=False, help_text='Weight as JSON, e.g. {"kind": "product", ...}.')

    def build_weight(self):
        """The configured Weight (constant by default)."""
        data = self.cleaned_data
        kind = data.get('weight') or ('json' if data.get('weight_config') else 'constant')
        if kind == 'json':
            if not data.get('weight_config'):
                raise ValidationError({'weight_config': _('A weight config is required.')})
            return weight_from_config(data['weight_config'])
        if kind in ('constant', 'const'):
            return weight_from_config({'kind': 'constant'})
        if kind == 'power':
            if data.get('gamma') is None:
                raise ValidationError({'gamma': _('The power weight needs --gamma.')})
            config = {'kind': 'power', 'gamma': data['gamma']}
            if data.get('center'):
                config['center'] = data['center']
            return weight_from_config(config)
        if data.get('beta') is None:
            raise ValidationError({'beta': _('This weight needs --beta.')})
        if kind == 'axis':
            return weight_from_config({
                'kind': 'axis',
                'beta': data['beta'],
                'axis': data.get('axis') or 0,
                'offset': data.get('offset') or 0.0,
            })
        flat = data.get('points') or [0.0, 0.0]
        if len(flat) % 2:
            raise ValidationError({'points': _('Give an even number of coordinates.')})
        pairs = [flat[i:i + 2] for i in range(0, len(flat), 2)]
        return weight_from_config({'kind': 'distance', 'beta': data['beta'], 'points': pairs})


class WeightProfileConfig(WeightConfig, RunConfig):
    samples = forms.IntegerField(required=False, min_value=4, initial=64, help_text='Random cubes per fit.')
    domain_side = forms.FloatField(
        required=False, validators=[validate_positive], help_text='Side of the sampling domain.'
    )
    alphas = FloatListField(required=False, help_text='Annular-decay alphas.')
    tol = forms.FloatField(required=False, validators=[validate_positive], help_text='Quadrature tolerance.')
    integrability_p = forms.FloatField(
        required=False,
        validators=[validate_exponent],
        help_text='Also classify integrability of |x|^(-2p + gamma) for this p.',
    )

    def clean(self):
        cleaned_data = super().clean()
        for alpha in cleaned_data.get('alphas') or ():
            validate_open_unit(alpha)
        if cleaned_data.get('integrability_p') and cleaned_data.get('gamma') is None:
            raise ValidationError(_('--integrability-p needs --gamma.'), code='missing_gamma')
        return cleaned_data


class ExtendVerifyConfig(WeightConfig, RunConfig):
    p = forms.FloatField(required=False, validators=[validate_exponent], help_text='Norm exponent (default 2).')
    alpha = forms.FloatField(
        required=False, validators=[validate_open_unit], help_text='Run one full extension at this alpha.'
    )
    alphas = FloatListField(required=False, help_text='One-step alphas, each below 1/2.')
    scales = FloatListField(required=False, help_text='Cube sides of the sweep.')
    resolution = forms.IntegerField(required=False, min_value=16, help_text='Grid cells per side.')
    export_grids = forms.CharField(required=False, help_text='Directory for per-function CSV grids.')

    def clean(self):
        cleaned_data = super().clean()
        for alpha in cleaned_data.get('alphas') or ():
            if not 0 < alpha < 0.5:
                raise ValidationError({'alphas': _('One-step alphas must lie in (0, 1/2).')})
        for scale in cleaned_data.get('scales') or ():
            validate_positive(scale)
        return cleaned_data


class CantorConfigForm(RunConfig):
    eta = forms.FloatField(required=False, initial=0.5, help_text='Removal scale eta (default 0.5).')
    tau = forms.FloatField(required=False, help_text='Ratio tau in (0, 1/2).')
    upsilon = forms.FloatField(required=False, validators=[validate_upsilon], help_text='tau = 2^-upsilon.')
    levels = forms.IntegerField(required=False, min_value=1, help_text='Number of levels (default 8).')
    mode = forms.ChoiceField(choices=[('margin', 'margin'), ('half', 'half')], required=False)
    safety = forms.FloatField(required=False, help_text='Ring-thickness safety factor (default 1 - tau).')
    omega = forms.FloatField(required=False, help_text='Product exponent omega in [0, 1).')
    f_counts = FloatListField(required=False, help_text='Interval counts of a user-supplied F.')
    csv = forms.CharField(required=False, help_text='Plot-data CSV path.')
    include_cubes = forms.BooleanField(required=False, help_text='List every square center in the JSON.')

    def clean(self):
        cleaned_data = super().clean()
        if cleaned_data.get('tau') is None and cleaned_data.get('upsilon') is None:
            raise ValidationError(_('Give --tau or --upsilon.'), code='missing_tau')
        if cleaned_data.get('eta') is None:
            cleaned_data['eta'] = 0.5
        if cleaned_data.get('levels') is None:
            cleaned_data['levels'] = 8
        return cleaned_data


class PorosityConfig(WeightConfig, CantorConfigForm):
    s = forms.FloatField(required=False, help_text='Exponent s > p.')
    p = forms.FloatField(required=False, help_text='Exponent p >= 1.')
    c1 = forms.FloatField(required=False, help_text='Extension exponent (default: measured).')
    delta = forms.FloatField(required=False, help_text='Homogeneity exponent (default: analytic or estimated).')
    sigma = forms.FloatField(required=False, help_text='Annular-decay exponent (default: analytic or estimated).')
    criterion = forms.ChoiceField(choices=[(c, c) for c in CRITERIA], required=False)
    closed_form = forms.BooleanField(required=False, help_text='Closed-form mode, no quadrature.')
    epsilon = forms.FloatField(required=False, help_text='Evaluate the (p, p - epsilon) query instead.')
    region_csv = forms.CharField(required=False, help_text='Feasible-region mask CSV path.')

    def clean(self):
        cleaned_data = super().clean()
        s, p = cleaned_data.get('s'), cleaned_data.get('p')
        if p is None or (s is None and cleaned_data.get('epsilon') is None):
            raise ValidationError(_('Give --s and --p (or --p and --epsilon).'), code='missing_exponents')
        if s is not None:
            validate_exponent_pair(s, p)
        if not cleaned_data.get('criterion'):
            cleaned_data['criterion'] = 'closed-form' if cleaned_data.get('closed_form') else 'exact-mu(R)'
        return cleaned_data

    def build_query(self, c1, delta, sigma, provenance):
        data = self.cleaned_data
        if data.get('epsilon') is not None:
            return lowered_exponent_query(data['p'], data['epsilon'], c1, delta, sigma, provenance)
        return PorosityQuery(data['s'], data['p'], c1, delta, sigma, provenance=provenance)


class SweepConfig(RunConfig):
    p = forms.FloatField(validators=[validate_exponent], help_text='Exponent p >= 1.')
    c1 = forms.FloatField(required=False, help_text='Extension exponent (default 1).')
    delta = forms.FloatField(required=False, help_text='Homogeneity exponent (default 2).')
    sigma = forms.FloatField(required=False, help_text='Annular-decay exponent (default 1).')
    omega = forms.FloatField(required=False, help_text='Product exponent omega in [0, 1).')
    upsilon_max = forms.FloatField(required=False, help_text='Largest upsilon of the grid (default 4).')
    s_max = forms.FloatField(required=False, help_text='Largest s of the grid (default 8).')
    points = forms.IntegerField(required=False, min_value=2, help_text='Grid points per axis (default 40).')
    csv = forms.CharField(required=False, help_text='Feasible-region mask CSV path.')
    spot_check = forms.IntegerField(required=False, min_value=0, help_text='Monotonicity spot-check samples.')

    def clean(self):
        cleaned_data = super().clean()
        defaults = {'c1': 1.0, 'delta': 2.0, 'sigma': 1.0, 'omega': 0.0, 'upsilon_max': 4.0,
                    's_max': 8.0, 'points': 40, 'spot_check': 0}
        for name, value in defaults.items():
            if cleaned_data.get(name) is None:
                cleaned_data[name] = value
        if not 0 <= cleaned_data['omega'] < 1:
            raise ValidationError({'omega': _('omega must lie in [0, 1).')})
        return cleaned_data
