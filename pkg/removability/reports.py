"""
JSON and CSV output of the management commands.

Reports are written with sorted keys and a fixed indent, and every report
carries ``schema_version``, so reading a report back and writing it again
gives the same bytes.
"""

import csv
import dataclasses
import json
import logging
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .conf import get_setting

logger = logging.getLogger(__name__)


class ReportEncoder(json.JSONEncoder):
    """JSON encoder for numpy scalars and arrays, dataclasses and Fractions."""

    def default(self, o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, Fraction):
            return {'numerator': o.numerator, 'denominator': o.denominator, 'value': float(o)}
        if hasattr(o, 'to_dict'):
            return o.to_dict()
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        if isinstance(o, (set, frozenset)):
            return sorted(o)
        return super().default(o)


def _finite(value):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def render(report):
    """Serialise a report dict, adding ``schema_version`` when missing."""
    data = json.loads(json.dumps(report, cls=ReportEncoder))
    data = _finite(data)
    data.setdefault('schema_version', get_setting('SCHEMA_VERSION'))
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + '\n'


def write_report(report, output=None, stdout=None):
    """
    Write a report to ``output`` (a path) or to the command's stdout.

    Returns:
        str: The rendered JSON
    """
    text = render(report)
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        logger.info(f"Report written to {path}")
    elif stdout is not None:
        stdout.write(text, ending='')
    return text


def rewrite(text):
    """Re-emit a rendered report; identical to the input for our own reports."""
    return render(json.loads(text))


def write_rows(path, header, rows):
    """Write plot data as CSV with a header row."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_value(v) for v in row])
    logger.info(f"CSV written to {path}", extra={'rows': len(rows)})
    return path


def _csv_value(value):
    if isinstance(value, Fraction):
        return repr(float(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    return value


def load_config(path):
    """
    Read a ``--config`` JSON file into a dict of option values.

    Raises:
        ValidationError: If the file is missing, unreadable or not a JSON object
    """
    try:
        with open(path, encoding='utf-8') as handle:
            data = json.load(handle)
    except (OSError, ValueError) as e:
        raise ValidationError(
            _('Cannot read configuration file %(path)s: %(error)s'),
            code='bad_config_file',
            params={'path': path, 'error': e},
        )
    if not isinstance(data, dict):
        raise ValidationError(_("The configuration file must hold a JSON object."), code="bad_config_file")
    return data
