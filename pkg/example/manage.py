#!/usr/bin/env python
"""
Management entry point of the example project.

``python manage.py test tilepress`` runs the test suite and
``python manage.py tilepress verify --config configs/carpet.json`` runs the property suite.
"""
import os
import sys


def main(argv):
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "settings")
    if len(argv) > 1 and argv[1] == "test":
        # Surface numpy and Django deprecations, like python -Wd.
        import warnings

        warnings.simplefilter("always", DeprecationWarning)

    from django.core.management import execute_from_command_line

    execute_from_command_line(argv)


if __name__ == "__main__":
    here = os.path.dirname(os.path.realpath(__file__))
    sys.path.insert(0, here)
    sys.path.insert(0, os.path.dirname(here))
    main(sys.argv)
