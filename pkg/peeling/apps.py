from django.apps import AppConfig


class PeelingConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'peeling'
