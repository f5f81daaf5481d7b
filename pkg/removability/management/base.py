"""
Shared plumbing of the removability management commands.

Flags are generated from the command's RunConfig form: every form field
``foo_bar`` becomes ``--foo-bar``. Values from ``--config`` are bound first
and flags given on the command line win.
"""

import logging

from django import forms
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand

from removability.reports import load_config, write_report

logger = logging.getLogger(__name__)


class RemovabilityCommand(BaseCommand):
    form_class = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON file with option values; flags override it.')
        for name, field in self.form_class.base_fields.items():
            flag = '--' + name.replace('_', '-')
            if isinstance(field, forms.BooleanField):
                parser.add_argument(flag, dest=name, action='store_true', default=None, help=field.help_text)
            else:
                parser.add_argument(flag, dest=name, default=None, help=field.help_text)

    def bind(self, options):
        """Validated form for the merged config file and flags."""
        data = load_config(options['config']) if options.get('config') else {}
        data = {k.replace('-', '_'): v for k, v in data.items()}
        unknown = sorted(set(data) - set(self.form_class.base_fields))
        if unknown:
            raise ValidationError(
                {'config': [f"unknown option {name}" for name in unknown]}
            )
        for name in self.form_class.base_fields:
            if options.get(name) is not None:
                data[name] = options[name]
        form = self.form_class(data)
        if not form.is_valid():
            raise ValidationError(form.errors.as_data())
        logger.debug(f"{self.__class__.__module__} bound {sorted(form.cleaned_data)}")
        return form

    def emit(self, report, form):
        return write_report(report, form.cleaned_data.get('output'), self.stdout)
