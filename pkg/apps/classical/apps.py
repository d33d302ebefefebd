from django.apps import AppConfig


class ClassicalConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.classical'
    verbose_name = 'Classical weak measurement'
