"""
Sweep the closed-form porosity condition over an (upsilon, s) grid
Usage: python manage.py sweep --p 1 --delta 2 --sigma 1 --c1 1 --csv region.csv
"""
from removability.error_handlers import command_errors
from removability.forms import SweepConfig
from removability.management.base import RemovabilityCommand
from removability.porosity import feasible_region, monotonicity_spot_check
from removability.reports import write_rows
from removability.validators import validate_c1, validate_structural_exponents


def region_rows(region):
    return [
        [float(u), float(s), bool(region.mask[i, j])]
        for i, u in enumerate(region.upsilons)
        for j, s in enumerate(region.ss)
    ]


class Command(RemovabilityCommand):
    help = 'Feasible-region mask of the closed-form porosity condition'
    form_class = SweepConfig

    @command_errors
    def handle(self, *args, **options):
        form = self.bind(options)
        data = form.cleaned_data
        validate_c1(data['c1'])
        validate_structural_exponents(data['delta'], data['sigma'])

        region = feasible_region(
            data['p'], data['c1'], data['delta'], data['sigma'], omega=data['omega'],
            upsilon_max=data['upsilon_max'], s_max=data['s_max'], points=data['points'],
        )
        report = {
            'command': 'sweep',
            'parameters': {k: data[k] for k in ('p', 'c1', 'delta', 'sigma', 'omega')},
            'region': region.to_dict(),
        }
        if data['spot_check']:
            report['monotonicity'] = monotonicity_spot_check(
                data['c1'], data['delta'], data['sigma'], samples=data['spot_check'],
                rng_seed=data['seed'], omega=data['omega'],
            )
        if data.get('csv'):
            write_rows(data['csv'], ['upsilon', 's', 'feasible'], region_rows(region))

        self.emit(report, form)
        style = self.style.SUCCESS if region.nonempty else self.style.WARNING
        self.stderr.write(style(f"feasible region {'nonempty' if region.nonempty else 'empty'}"))
