from django.apps import AppConfig
from django.utils.translation import gettext_lazy as _


class TilepressApp(AppConfig):
    name = "tilepress"
    verbose_name = _("Tile pressure")
