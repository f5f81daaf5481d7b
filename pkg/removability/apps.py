from django.apps import AppConfig


class RemovabilityConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'removability'
    verbose_name = 'Weighted Sobolev removability toolkit'
