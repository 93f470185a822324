"""
The ``tilepress`` console script.

Outside a Django project it configures a minimal settings object and runs the
``tilepress`` management command.
"""
import os
import sys

from django.conf import settings
from django.core.management import execute_from_command_line

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {"plain": {"format": "%(levelname)s %(name)s: %(message)s"}},
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "plain",
            "stream": "ext://sys.stderr",
        }
    },
    "loggers": {"tilepress": {"handlers": ["console"], "level": "WARNING", "propagate": False}},
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not settings.configured and not os.environ.get("DJANGO_SETTINGS_MODULE"):
        settings.configure(INSTALLED_APPS=["tilepress"], LOGGING=LOGGING)
    execute_from_command_line(["tilepress", "tilepress"] + argv)


if __name__ == "__main__":
    main()
