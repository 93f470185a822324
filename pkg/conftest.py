"""
Pytest wiring: configure Django the same way ``example/manage.py`` does for ``runtests.sh``.
"""
import os
import sys

import django

here = os.path.dirname(os.path.realpath(__file__))
sys.path.insert(0, os.path.join(here, "example"))
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "settings")
django.setup()
