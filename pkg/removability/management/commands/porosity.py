"""
Evaluate the (s,p)-porosity criterion on generated Cantor covers
Usage: python manage.py porosity --eta 0.5 --upsilon 1.1 --s 3 --p 1 --levels 14
"""
import math

from removability.cantor import feasible_eta, measure_level
from removability.error_handlers import command_errors
from removability.extension import default_suite, measure_constants
from removability.forms import PorosityConfig
from removability.geometry import Cube
from removability.management.base import RemovabilityCommand
from removability.management.commands.cantor_gen import cantor_config, generate_levels, product_config
from removability.management.commands.sweep import region_rows
from removability.porosity import build_report, closed_form_report, feasible_region
from removability.reports import write_rows
from removability.weights import profile_weight

# Small sweep used when no --c1 is given
C1_ALPHAS = (0.2,)
C1_SCALES = (1.0,)
C1_RESOLUTION = 128


def structural_exponents(w, data, needed):
    """delta and sigma from flags, the weight's analytic values, or an estimate."""
    delta, sigma = data.get('delta'), data.get('sigma')
    provenance = {}
    if delta is not None:
        provenance['delta'] = 'user'
    if sigma is not None:
        provenance['sigma'] = 'user'
    if not needed or (delta is not None and sigma is not None):
        return delta, sigma, provenance
    analytic = w.analytic_exponents() or {}
    if delta is None and analytic.get('delta') is not None:
        delta, provenance['delta'] = analytic['delta'], 'analytic'
    if sigma is None and analytic.get('sigma') is not None:
        sigma, provenance['sigma'] = analytic['sigma'], 'analytic'
    if delta is None or sigma is None:
        estimate = profile_weight(w, Cube((0.0, 0.0), 2.0), rng_seed=data['seed'])
        if delta is None:
            delta, provenance['delta'] = estimate.delta, 'estimated'
        if sigma is None:
            sigma, provenance['sigma'] = estimate.sigma, 'estimated'
    return delta, sigma, provenance


def extension_exponent(w, data, p):
    """c1 from --c1 or measured on a small extension sweep."""
    if data.get('c1') is not None:
        return data['c1'], {'c1': 'user'}
    constants = measure_constants(
        w, p=p, test_suite=default_suite(data['seed']), alphas=C1_ALPHAS, scales=C1_SCALES,
        resolution=C1_RESOLUTION,
    )
    return constants.c1, {'c1': 'measured', 'C1_measured': constants.C1_measured}


class Command(RemovabilityCommand):
    help = 'Porosity verdict for Cantor covers (or the closed-form condition)'
    form_class = PorosityConfig

    @command_errors
    def handle(self, *args, **options):
        form = self.bind(options)
        data = form.cleaned_data
        w = form.build_weight()
        tau = data['tau'] if data.get('tau') is not None else 2.0 ** -data['upsilon']
        eta = feasible_eta(data['eta'], tau)
        cfg = cantor_config(data, eta=eta)
        pcfg = product_config(data, cfg)
        criterion = data['criterion']
        closed = data.get('closed_form') or criterion == 'closed-form'

        needs_exponents = closed or criterion != 'exact-mu(R)' or bool(data.get('region_csv'))
        delta, sigma, provenance = structural_exponents(w, data, needs_exponents)
        p = data['p'] - data['epsilon'] if data.get('epsilon') is not None else data['p']
        c1, c1_provenance = extension_exponent(w, data, p)
        provenance.update(c1_provenance)
        q = form.build_query(c1, delta, sigma, provenance)

        omega = pcfg.omega if pcfg is not None else 0.0
        upsilon = cfg.upsilon if cfg.upsilon is not None else -math.log2(cfg.tau)
        if closed:
            report = closed_form_report(upsilon, q, omega=omega)
        else:
            levels = [measure_level(level, w) for level in generate_levels(data, cfg, pcfg)]
            report = build_report(levels, q, criterion=criterion)

        payload = report.to_dict()
        payload.update({
            'command': 'porosity',
            'cantor': cfg.to_dict(),
            'product': None if pcfg is None else pcfg.to_dict(),
            'weight': w.to_config(),
        })
        if eta != data['eta']:
            payload['eta_adjusted'] = {'requested': data['eta'], 'used': eta}
            self.stderr.write(self.style.WARNING(
                f"eta={data['eta']:g} removes all of [0, 1] at tau={tau:.4g}; covers use eta={eta:.4g}"
            ))
        if data.get('csv') and report.series is not None:
            rows = [
                [k, float(t), float(lt)]
                for k, t, lt in zip(report.series.ks, report.series.terms, report.series.log_terms)
            ]
            write_rows(data['csv'], ['k', 't_k', 'log_t_k'], rows)
        if data.get('region_csv'):
            region = feasible_region(q.p, q.c1, q.delta, q.sigma, omega=omega)
            payload['region'] = region.to_dict()
            write_rows(data['region_csv'], ['upsilon', 's', 'feasible'], region_rows(region))

        self.emit(payload, form)
        self.stderr.write(self.style.SUCCESS(f"verdict: {payload.get('verdict')}"))
