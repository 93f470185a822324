import os

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

# Enumeration stops before materializing more addresses than this.
TILEPRESS_CAPACITY = getattr(settings, "TILEPRESS_CAPACITY", 20_000_000)

# Split Ruelle operator grids
TILEPRESS_GRID_SIZE = getattr(settings, "TILEPRESS_GRID_SIZE", 257)  # nodes per face side
TILEPRESS_TOL = getattr(settings, "TILEPRESS_TOL", 1e-8)
TILEPRESS_MAX_ITER = getattr(settings, "TILEPRESS_MAX_ITER", 10_000)

# Search bound for the strong irreducibility/primitivity witnesses.
TILEPRESS_CLASSIFY_CAP = getattr(settings, "TILEPRESS_CLASSIFY_CAP", 6)

# Largest |t| accepted on a pressure curve grid.
TILEPRESS_T_MAX = getattr(settings, "TILEPRESS_T_MAX", 20.0)

# Certified Birkhoff brackets sample the last REFINE_DEPTH letters on a grid.
TILEPRESS_REFINE_DEPTH = getattr(settings, "TILEPRESS_REFINE_DEPTH", 2)
TILEPRESS_REFINE_GRID = getattr(settings, "TILEPRESS_REFINE_GRID", 129)

TILEPRESS_THREADS = getattr(settings, "TILEPRESS_THREADS", None)  # None: use the environment
TILEPRESS_CSV_DIGITS = getattr(settings, "TILEPRESS_CSV_DIGITS", 17)


if TILEPRESS_GRID_SIZE < 2:
    raise ImproperlyConfigured("TILEPRESS_GRID_SIZE should be at least 2")

if TILEPRESS_REFINE_DEPTH < 1 or TILEPRESS_REFINE_GRID < 2:
    raise ImproperlyConfigured(
        "TILEPRESS_REFINE_DEPTH should be positive and TILEPRESS_REFINE_GRID at least 2"
    )

for _name in ("TILEPRESS_CAPACITY", "TILEPRESS_MAX_ITER", "TILEPRESS_CLASSIFY_CAP"):
    if int(globals()[_name]) <= 0:
        raise ImproperlyConfigured("{0} should be a positive integer".format(_name))

if not (0 < TILEPRESS_TOL < 1) or TILEPRESS_T_MAX <= 0:
    raise ImproperlyConfigured("TILEPRESS_TOL should be in (0, 1) and TILEPRESS_T_MAX positive")


def get_thread_count(override=None):
    """
    Resolve the worker count: explicit flag, then setting, then the environment.
    """
    for value in (override, TILEPRESS_THREADS, os.environ.get("TILEPRESS_THREADS")):
        if value in (None, ""):
            continue
        try:
            count = int(value)
        except (TypeError, ValueError):
            raise ImproperlyConfigured("Invalid thread count: {0!r}".format(value))
        if count < 1:
            raise ImproperlyConfigured("Thread count should be at least 1, got {0}".format(count))
        return count
    return 1
