"""
Estimate the doubling constant and the homogeneity/annular-decay exponents of a weight
Usage: python manage.py weight_profile --weight power --gamma -1
"""
from removability.error_handlers import command_errors
from removability.forms import WeightProfileConfig
from removability.geometry import Cube
from removability.management.base import RemovabilityCommand
from removability.weights import DEFAULT_ALPHAS, power_integrability, profile_weight


class Command(RemovabilityCommand):
    help = 'Estimate C_D, delta, delta\' and sigma of a weight on a square domain'
    form_class = WeightProfileConfig

    @command_errors
    def handle(self, *args, **options):
        form = self.bind(options)
        data = form.cleaned_data
        w = form.build_weight()
        domain = Cube((0.0, 0.0), data.get('domain_side') or 2.0)

        exponents = profile_weight(
            w,
            domain,
            samples=data.get('samples') or 64,
            rng_seed=data['seed'],
            alphas=tuple(data.get('alphas') or DEFAULT_ALPHAS),
            tol=data.get('tol') or 1e-6,
        )
        report = {
            'command': 'weight_profile',
            'weight': w.to_config(),
            'domain': domain.to_dict(),
            'seed': data['seed'],
            'estimated': exponents.to_dict(),
            'analytic': w.analytic_exponents(),
        }
        if data.get('integrability_p'):
            report['integrability'] = power_integrability(2, data['integrability_p'], data['gamma']).to_dict()

        self.emit(report, form)
        if exponents.clamps:
            self.stderr.write(self.style.WARNING(f'{len(exponents.clamps)} exponent(s) clamped'))
        self.stderr.write(self.style.SUCCESS(
            f'{w.name}: C_D={exponents.doubling_constant:.4g} delta={exponents.delta:.4g} '
            f'delta\'={exponents.delta_prime:.4g} sigma={exponents.sigma:.4g}'
        ))
