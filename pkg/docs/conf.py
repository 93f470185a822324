"""
Sphinx configuration for the tilepress documentation.

Autodoc imports the package, so Django is set up with the example project settings.
"""
import os
import sys

import django

sys.path.insert(0, os.path.abspath(".."))
sys.path.insert(0, os.path.abspath("../example"))
os.environ.setdefault("DJANGO_SETTINGS_MODULE", "settings")
django.setup()

project = "django-tilepress"
copyright = "2026, the tilepress developers"
author = "the tilepress developers"

version = "1.0"
release = "1.0"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
]

source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build"]
pygments_style = "sphinx"

autodoc_member_order = "bysource"

htmlhelp_basename = "django-tilepressdoc"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "django": (
        "https://docs.djangoproject.com/en/stable/",
        "https://docs.djangoproject.com/en/stable/_objects/",
    ),
}
