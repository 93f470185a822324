# Django settings for example project.
from os.path import dirname, join, realpath

# Add parent path,
# Allow starting the app without installing the module.
import sys

sys.path.insert(0, dirname(dirname(realpath(__file__))))

DEBUG = True

# No models, but the test runner expects a database.
DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": join(dirname(__file__), "demo.db"),
    }
}

TIME_ZONE = "Europe/Amsterdam"
LANGUAGE_CODE = "en-us"
USE_I18N = True

# Make this unique, and don't share it with anybody.
SECRET_KEY = "-#@bi6bue%#1j)6+4b&#i0g-*xro@%f@_#zwv=2-g_@n3n_kj5"

TEST_RUNNER = "django.test.runner.DiscoverRunner"

INSTALLED_APPS = ("tilepress",)

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {"plain": {"format": "%(levelname)s %(name)s: %(message)s"}},
    "handlers": {"console": {"class": "logging.StreamHandler", "formatter": "plain"}},
    "loggers": {
        "tilepress": {
            "handlers": ["console"],
            "level": "WARNING",
            "propagate": False,
        },
    },
}

# tilepress settings, kept small so the example configurations run in seconds.
TILEPRESS_GRID_SIZE = 65
TILEPRESS_REFINE_GRID = 33
TILEPRESS_CAPACITY = 5_000_000
