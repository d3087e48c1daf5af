from django.apps import AppConfig


class PlgpConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'plgp'
    verbose_name = 'Particle learning for Gaussian processes'
