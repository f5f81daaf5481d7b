"""Configure Django settings for running the test suite under pytest."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'porosity_lab.settings')
django.setup()
