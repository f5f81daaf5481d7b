"""
Generate the square covers of the middle-interval Cantor set and of its products
Usage: python manage.py cantor_gen --eta 0.5 --tau 0.25 --levels 10 --csv covers.csv
"""
from removability.cantor import (
    CantorConfig,
    ProductConfig,
    build_levels,
    check_nesting,
    cover_levels,
    product_count_bound,
    product_covers,
    removed_length,
)
from removability.error_handlers import command_errors
from removability.forms import CantorConfigForm
from removability.management.base import RemovabilityCommand
from removability.reports import write_rows

CSV_COLUMNS = [
    'k', 'count', 'side', 'ring_width', 'alpha', 'alpha_over_2tau_k', 'interval_length',
    'interval_gap', 'cube_gap',
]


def cantor_config(data, eta=None):
    """CantorConfig from cleaned form data, ``eta`` overriding the flag."""
    eta = data['eta'] if eta is None else eta
    return CantorConfig(eta=eta, tau=data.get('tau'), levels=data['levels'], upsilon=data.get('upsilon'))


def product_config(data, cfg):
    """ProductConfig when --omega or --f-counts is given, else None."""
    if data.get('omega') is None and not data.get('f_counts'):
        return None
    counts = data.get('f_counts')
    return ProductConfig(
        cfg,
        omega=data.get('omega') or 0.0,
        f_counts=None if not counts else tuple(int(c) for c in counts),
    )


def cover_options(data):
    options = {}
    if data.get('mode'):
        options['mode'] = data['mode']
    if data.get('safety') is not None:
        options['safety'] = data['safety']
    return options


def generate_levels(data, cfg, pcfg):
    """Cover levels 1..levels of E, or of E x F for a product config."""
    options = cover_options(data)
    if pcfg is None:
        return cover_levels(cfg, **options)
    return [product_covers(pcfg, k, **options) for k in range(1, cfg.levels + 1)]


class Command(RemovabilityCommand):
    help = 'Emit Cantor cover levels as JSON and plot-data CSV'
    form_class = CantorConfigForm

    @command_errors
    def handle(self, *args, **options):
        form = self.bind(options)
        data = form.cleaned_data
        cfg = cantor_config(data)
        pcfg = product_config(data, cfg)
        levels = generate_levels(data, cfg, pcfg)
        simulated = build_levels(cfg)

        report = {
            'command': 'cantor_gen',
            'cantor': cfg.to_dict(),
            'product': None if pcfg is None else pcfg.to_dict(),
            'removed_length': float(removed_length(cfg)),
            'removal_constant': cfg.removal_constant,
            'level_lengths': [level.length for level in simulated],
            'levels': [level.to_dict(include_cubes=bool(data.get('include_cubes'))) for level in levels],
        }
        if pcfg is None:
            report['nesting'] = [
                check_nesting(cfg, k, **cover_options(data)) for k in range(1, cfg.levels)
                if simulated[k].lefts is not None and simulated[k + 1].lefts is not None
            ]
        else:
            report['count_bounds'] = [product_count_bound(pcfg, level.k) for level in levels]

        if data.get('csv'):
            rows = [
                [
                    level.k, level.count, level.side, level.width, level.alpha,
                    level.alpha / (2 * cfg.tau) ** level.k, level.interval_length,
                    level.interval_gap, level.cube_gap,
                ]
                for level in levels
            ]
            write_rows(data['csv'], CSV_COLUMNS, rows)

        self.emit(report, form)
        self.stderr.write(self.style.SUCCESS(f'{len(levels)} cover levels generated'))
