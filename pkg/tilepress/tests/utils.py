import json
import os
from functools import wraps

from tilepress import appsettings
from tilepress.pillow import MapSpec, Potential
from tilepress.subsystem import Subsystem
from tilepress.thermo import transfer_operator


def override_appsettings(**settings):
    """
    Temporary override the appsettings.
    """

    def _dec(func):
        @wraps(func)
        def _inner(*args, **kwargs):
            # Apply new settings, backup old, clear caches
            old_values = {}
            for key, new_value in settings.items():
                old_values[key] = getattr(appsettings, key)
                setattr(appsettings, key, new_value)
            _reset_setting_caches()
            try:
                return func(*args, **kwargs)
            finally:
                for key, old_value in old_values.items():
                    setattr(appsettings, key, old_value)
                _reset_setting_caches()

        return _inner

    return _dec


def _reset_setting_caches():
    transfer_operator.cache_clear()


def spec_and_sub(m=3, preset="full"):
    spec = MapSpec(m)
    return spec, Subsystem.preset(spec, preset)


def g2(scale=0.3):
    return Potential.from_mapping({"g2": scale})


def write_config(directory, data, name="config.json"):
    path = os.path.join(directory, name)
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(data, fp)
    return path
