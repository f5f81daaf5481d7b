"""
Error types and command-level error handling for the removability toolkit.

Validation problems are raised as ``django.core.exceptions.ValidationError``
throughout the app. Numerical failures raise the ``NumericalError`` family
below. Management commands translate both into ``CommandError`` with the
documented exit codes.
"""

import logging
from functools import wraps

from django.core.exceptions import ValidationError
from django.core.management.base import CommandError

logger = logging.getLogger(__name__)

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class NumericalError(Exception):
    """Base class for failures of a numerical computation."""


class QuadratureError(NumericalError):
    """
    Adaptive quadrature did not reach the requested tolerance.

    Carries the best estimate found so far so callers can still report it.
    """

    def __init__(self, message, best_estimate, achieved_tol, evaluations):
        super().__init__(message)
        self.best_estimate = best_estimate
        self.achieved_tol = achieved_tol
        self.evaluations = evaluations


class GeometryResourceError(NumericalError):
    """A geometric construction would exceed the configured cube cap."""

    def __init__(self, message, requested, cap):
        super().__init__(message)
        self.requested = requested
        self.cap = cap


class DegenerateWeightError(NumericalError):
    """A sampled cube carries zero weighted mass."""

    def __init__(self, message, cube):
        super().__init__(message)
        self.cube = cube


class ExtensionError(NumericalError):
    """The reflection extension could not be carried out."""


def describe_validation_error(error):
    """Flatten a ValidationError into one readable line."""
    if hasattr(error, 'message_dict'):
        parts = []
        for field, messages in sorted(error.message_dict.items()):
            parts.append(f"{field}: {' '.join(str(m) for m in messages)}")
        return '; '.join(parts)
    return ' '.join(str(m) for m in error.messages)


def command_errors(handle):
    """
    Decorator for ``BaseCommand.handle`` mapping toolkit errors to exit codes.

    ValidationError exits with 2, NumericalError with 3. Both are logged
    with the traceback before the CommandError is raised.
    """
    @wraps(handle)
    def wrapper(command, *args, **options):
        name = command.__class__.__module__.rsplit('.', 1)[-1]
        try:
            return handle(command, *args, **options)
        except ValidationError as e:
            message = describe_validation_error(e)
            logger.warning(f"Validation failed in {name}: {message}", extra={'command': name})
            raise CommandError(f"invalid configuration: {message}", returncode=EXIT_VALIDATION)
        except NumericalError as e:
            logger.error(
                f"Numerical failure in {name}: {str(e)}",
                exc_info=True,
                extra={'command': name, 'error_type': e.__class__.__name__},
            )
            raise CommandError(f"numerical failure: {str(e)}", returncode=EXIT_NUMERICAL)

    return wrapper
