from django.apps import AppConfig


class ForecastingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'forecasting'
    verbose_name = 'FC-GAGA forecasting'

    def ready(self):
        from django.conf import settings

        from .engine import set_deterministic

        set_deterministic(settings.FCGAGA.get('DETERMINISTIC', True))
