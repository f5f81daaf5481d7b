"""
Measure the extension constants on the default test-function suite
Usage: python manage.py extend_verify --alphas 0.4,0.2,0.1 --scales 1,0.5
"""
from pathlib import Path

from removability.error_handlers import command_errors
from removability.extension import (
    DEFAULT_ALPHAS,
    DEFAULT_SCALES,
    alpha_power_bracket,
    default_suite,
    extend_full,
    measure_constants,
    ring_mask,
)
from removability.forms import ExtendVerifyConfig
from removability.geometry import Cube
from removability.grid import GridFunction, write_csv
from removability.management.base import RemovabilityCommand
from removability.conf import get_setting


class Command(RemovabilityCommand):
    help = 'Measure one-step and final-step extension constants (C1, C0, c1)'
    form_class = ExtendVerifyConfig

    @command_errors
    def handle(self, *args, **options):
        form = self.bind(options)
        data = form.cleaned_data
        w = form.build_weight()
        p = data.get('p') or 2.0
        resolution = data.get('resolution') or get_setting('GRID_RESOLUTION')
        suite = default_suite(data['seed'])

        constants = measure_constants(
            w,
            p=p,
            test_suite=suite,
            alphas=tuple(data.get('alphas') or DEFAULT_ALPHAS),
            scales=tuple(data.get('scales') or DEFAULT_SCALES),
            resolution=resolution,
        )
        report = {
            'command': 'extend_verify',
            'weight': w.to_config(),
            'p': p,
            'resolution': resolution,
            'seed': data['seed'],
            'constants': constants.to_dict(),
        }

        alpha = data.get('alpha')
        if alpha is not None or data.get('export_grids'):
            alpha = 0.25 if alpha is None else alpha
            report['full_extension'] = self._full_extension(
                w, p, alpha, resolution, suite, data.get('export_grids')
            )
            report['alpha_power_bracket'] = alpha_power_bracket(alpha, constants.C1)

        self.emit(report, form)
        self.stderr.write(self.style.SUCCESS(
            f'C1={constants.C1:.4g} (measured {constants.C1_measured}) c1={constants.c1:.4g} C0={constants.C0}'
        ))

    def _full_extension(self, w, p, alpha, resolution, suite, export_dir):
        cube = Cube((0.0, 0.0), 1.0)
        mask = ring_mask(cube, resolution, alpha)
        runs = []
        for name, func in suite:
            u = GridFunction.sample(func, cube, resolution, mask=mask)
            extended, constants, steps = extend_full(u, cube, alpha, w, p)
            runs.append({
                'function': name,
                'constants': constants.to_dict(),
                'steps': [step.to_dict() for step in steps],
            })
            if export_dir:
                directory = Path(export_dir)
                directory.mkdir(parents=True, exist_ok=True)
                write_csv(u, directory / f'{name}_input.csv')
                write_csv(extended, directory / f'{name}_extended.csv')
        return {'alpha': alpha, 'runs': runs}
