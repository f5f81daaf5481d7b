"""
Django settings for porosity_lab project.

Generated by 'django-admin startproject' using Django 4.2.25.

The project has no web surface and no database: Django provides the
configuration layer, logging, validation, the management-command CLI and
the test runner for the numerical app ``removability``.

For more information on this file, see
https://docs.djangoproject.com/en/4.2/topics/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'django-insecure-porosity-lab-local-only-key',
)

DEBUG = os.environ.get('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'removability',
]

# No persistence: every report is written to files or stdout.
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Internationalization
# https://docs.djangoproject.com/en/4.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Cache for per-cell weight masses and Whitney decompositions
CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
        'LOCATION': 'removability-cache',
        'TIMEOUT': None,
        'OPTIONS': {
            'MAX_ENTRIES': 512,
        },
    }
}


# Numerical defaults. Every library function takes these as explicit keyword
# arguments; the values below are used only when an argument is omitted.
REMOVABILITY = {
    'SEED': int(os.environ.get('REMOVABILITY_SEED', '20240601')),
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


# Logging configuration
LOG_DIR = BASE_DIR / 'logs'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': os.environ.get('REMOVABILITY_LOG_LEVEL', 'WARNING'),
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'removability': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}

# File logging only when the logs directory has been created
if LOG_DIR.is_dir():
    LOGGING['handlers']['file'] = {
        'level': 'INFO',
        'class': 'logging.FileHandler',
        'filename': os.path.join(LOG_DIR, 'removability.log'),
        'formatter': 'verbose',
    }
    LOGGING['loggers']['removability']['handlers'].append('file')
