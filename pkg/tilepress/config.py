"""
The JSON run configuration.

A configuration has the sections ``map``, ``subsystem``, ``potential``, ``grid``,
``levels``, ``ldp`` and ``output``. Only ``map`` is required; omitted values take their
defaults from :mod:`tilepress.appsettings`.
"""
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from tilepress import forms
from tilepress.cells import EdgeLabel
from tilepress.pillow import MapSpec, Potential
from tilepress.subsystem import Subsystem

logger = logging.getLogger(__name__)

SECTION_FORMS = {
    "map": forms.MapForm,
    "potential": forms.PotentialForm,
    "grid": forms.GridForm,
    "levels": forms.LevelsForm,
    "ldp": forms.LdpForm,
    "output": forms.OutputForm,
}
SECTIONS = ("map", "subsystem", "potential", "grid", "levels", "ldp", "output")


@dataclass
class RunConfig:
    m: int
    subsystem: object = "full"
    potential: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    levels: dict = field(default_factory=dict)
    ldp: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        """
        Validate a decoded configuration.

        :raises ImproperlyConfigured: with a ``section.key: message`` diagnostic.
        """
        if not isinstance(data, dict):
            raise ImproperlyConfigured("The configuration should be a JSON object")
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ImproperlyConfigured(
                "Unknown configuration sections: {0}".format(", ".join(unknown))
            )
        if "map" not in data:
            raise ImproperlyConfigured("map: this section is required")

        cleaned = {}
        for section, form_class in SECTION_FORMS.items():
            cleaned[section] = _clean_section(section, form_class, data.get(section, {}))

        subsystem_form = forms.SubsystemForm(data={"subsystem": data.get("subsystem")})
        if not subsystem_form.is_valid():
            raise ImproperlyConfigured(_format_errors(None, subsystem_form.errors))

        config = cls(
            m=cleaned["map"]["m"],
            subsystem=subsystem_form.cleaned_data["subsystem"],
            potential=cleaned["potential"],
            grid=cleaned["grid"],
            levels=cleaned["levels"],
            ldp=cleaned["ldp"],
            output=cleaned["output"],
        )
        # Catch combinations the forms cannot see, such as cells outside the map.
        try:
            config.subsystem_object()
            config.potential_object()
        except ValueError as e:
            raise ImproperlyConfigured("subsystem/potential: {0}".format(e))
        return config

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ImproperlyConfigured(
                "Invalid JSON at line {0} column {1}: {2}".format(e.lineno, e.colno, e.msg)
            )
        return cls.from_dict(data)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fp:
            config = cls.from_json(fp.read())
        logger.debug("Loaded configuration from %s", path)
        return config

    def as_dict(self):
        data = asdict(self)
        data["map"] = {"m": data.pop("m")}
        return data

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    @property
    def spec(self):
        return MapSpec(self.m)

    def subsystem_object(self):
        spec = self.spec
        if isinstance(self.subsystem, str):
            return Subsystem.preset(spec, self.subsystem)
        return Subsystem.from_triples(spec, self.subsystem)

    def potential_object(self):
        return Potential.from_mapping(
            self.potential["coefficients"],
            kappa=self.potential["kappa"],
            allow_discontinuous=self.potential["allow_discontinuous"],
        )

    def t_grid(self):
        grid = self.ldp["t_grid"]
        return np.linspace(grid["start"], grid["stop"], grid["num"])

    @property
    def e0(self):
        return EdgeLabel(self.ldp["e0"])

    @property
    def n_range(self):
        low, high = self.ldp["n_range"]
        return list(range(low, high + 1))

    def alphas(self, energy):
        """
        The configured alpha levels, explicit values first, then the fractions of the
        half-range on either side of ``gamma``.
        """
        values = list(self.ldp["alphas"])
        gamma = energy.gamma_phi
        for fraction in self.ldp["alpha_fractions"]:
            if fraction >= 0:
                values.append(gamma + fraction * (energy.alpha_max_hat - gamma))
            else:
                values.append(gamma + fraction * (gamma - energy.alpha_min_hat))
        return sorted(values)

    def with_overrides(self, n_max=None):
        if n_max is None:
            return self
        levels = dict(self.levels, n_max=n_max)
        return RunConfig.from_dict(dict(self.as_dict(), levels=levels))


def _format_errors(section, errors):
    prefix = "" if section is None else section + "."
    return "; ".join(
        "{0}{1}: {2}".format(prefix, key, " ".join(messages))
        for key, messages in sorted(errors.items())
    )


def _clean_section(section, form_class, values):
    if not isinstance(values, dict):
        raise ImproperlyConfigured("{0}: expected an object".format(section))
    form = form_class(data=values)
    unknown = sorted(set(values) - set(form.fields))
    if unknown:
        raise ImproperlyConfigured(
            "; ".join("{0}.{1}: unknown key".format(section, key) for key in unknown)
        )
    if not form.is_valid():
        raise ImproperlyConfigured(_format_errors(section, form.errors))
    return dict(form.cleaned_data)
