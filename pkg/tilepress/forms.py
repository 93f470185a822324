"""
Validation of the run configuration sections.

Each JSON section is checked by a plain Django form, so the error messages and the
cleaning rules are the usual ones.
"""
from django import forms
from django.core.exceptions import ValidationError

from tilepress import appsettings
from tilepress.cells import EdgeLabel
from tilepress.pillow import ALIASES, BASIS_NAMES
from tilepress.subsystem import PRESETS

FORMAT_CHOICES = (("csv", "CSV"), ("json", "JSON"))
EDGE_CHOICES = tuple((edge.value, edge.value) for edge in EdgeLabel)


class ListField(forms.Field):
    """
    A JSON array, optionally of a fixed length, with items cleaned by ``item_field``.
    """

    def __init__(self, item_field=None, length=None, min_length=0, **kwargs):
        self.item_field = item_field
        self.length = length
        self.min_length = min_length
        super().__init__(**kwargs)

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if not isinstance(value, (list, tuple)):
            raise ValidationError("Expected a list.", code="invalid")
        if self.length is not None and len(value) != self.length:
            raise ValidationError(
                "Expected a list of %(length)d items.",
                code="length",
                params={"length": self.length},
            )
        if len(value) < self.min_length:
            raise ValidationError(
                "Expected at least %(min)d items.",
                code="min_length",
                params={"min": self.min_length},
            )
        if self.item_field is None:
            return list(value)
        return [self.item_field.clean(item) for item in value]


class StrictFloatField(forms.FloatField):
    # Booleans are numbers to Python, never to a config file.
    def to_python(self, value):
        if isinstance(value, bool):
            raise ValidationError("Expected a number.", code="invalid")
        return super().to_python(value)


class StrictIntegerField(forms.IntegerField):
    def to_python(self, value):
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValidationError("Expected an integer.", code="invalid")
        return super().to_python(value)


class MapForm(forms.Form):
    m = StrictIntegerField(min_value=2)


class SubsystemField(forms.Field):
    """
    A preset name, or a list of ``[face, i, j]`` triples.
    """

    def to_python(self, value):
        if value in (None, ""):
            return "full"
        if isinstance(value, str):
            if value not in PRESETS:
                raise ValidationError(
                    "Unknown preset %(value)r, expected one of %(presets)s.",
                    code="invalid",
                    params={"value": value, "presets": ", ".join(PRESETS)},
                )
            return value
        triples = ListField(ListField(length=3), min_length=1).clean(value)
        cleaned = []
        for face, i, j in triples:
            if str(face).lower() not in ("white", "black", "w", "b"):
                raise ValidationError(
                    "Unknown face %(face)r.", code="invalid", params={"face": face}
                )
            cleaned.append(
                [
                    "white" if str(face).lower()[0] == "w" else "black",
                    StrictIntegerField(min_value=0).clean(i),
                    StrictIntegerField(min_value=0).clean(j),
                ]
            )
        return sorted(cleaned)


class SubsystemForm(forms.Form):
    subsystem = SubsystemField(required=False)


class PotentialForm(forms.Form):
    coefficients = forms.Field(required=False)
    kappa = StrictFloatField(required=False, min_value=0.0, max_value=1.0)
    allow_discontinuous = forms.BooleanField(required=False)

    def clean_coefficients(self):
        value = self.cleaned_data.get("coefficients") or {}
        if not isinstance(value, dict):
            raise ValidationError("Expected an object of basis coefficients.", code="invalid")
        known = set(BASIS_NAMES) | set(ALIASES) | {"signed_const"}
        cleaned = {}
        for name, coefficient in value.items():
            if name not in known:
                raise ValidationError(
                    "Unknown basis element %(name)r.", code="invalid", params={"name": name}
                )
            cleaned[name] = StrictFloatField().clean(coefficient)
        return cleaned

    def clean_kappa(self):
        kappa = self.cleaned_data.get("kappa")
        if kappa is None:
            return 1.0
        if kappa <= 0:
            raise ValidationError("Ensure this value is greater than 0.", code="min_value")
        return kappa


class GridForm(forms.Form):
    G = StrictIntegerField(required=False, min_value=2)
    tol = StrictFloatField(required=False)
    max_iter = StrictIntegerField(required=False, min_value=1)

    def clean_G(self):
        value = self.cleaned_data.get("G")
        return appsettings.TILEPRESS_GRID_SIZE if value is None else value

    def clean_tol(self):
        value = self.cleaned_data.get("tol")
        if value is None:
            return appsettings.TILEPRESS_TOL
        if not 0 < value < 1:
            raise ValidationError("Ensure this value is in (0, 1).", code="range")
        return value

    def clean_max_iter(self):
        value = self.cleaned_data.get("max_iter")
        return appsettings.TILEPRESS_MAX_ITER if value is None else value


class LevelsForm(forms.Form):
    n_max = StrictIntegerField(required=False, min_value=1)
    capacity = StrictIntegerField(required=False, min_value=1)

    def clean_n_max(self):
        value = self.cleaned_data.get("n_max")
        return 4 if value is None else value

    def clean_capacity(self):
        value = self.cleaned_data.get("capacity")
        return appsettings.TILEPRESS_CAPACITY if value is None else value


class TGridForm(forms.Form):
    start = StrictFloatField(required=False)
    stop = StrictFloatField(required=False)
    num = StrictIntegerField(required=False, min_value=4)

    def clean(self):
        cleaned = super().clean()
        for key, default in (("start", -4.0), ("stop", 4.0), ("num", 41)):
            if cleaned.get(key) is None:
                cleaned[key] = default
        if cleaned["start"] >= cleaned["stop"]:
            raise ValidationError("start should be below stop.", code="order")
        if max(abs(cleaned["start"]), abs(cleaned["stop"])) > appsettings.TILEPRESS_T_MAX:
            raise ValidationError(
                "The t grid exceeds |t| <= %(t_max)s.",
                code="range",
                params={"t_max": appsettings.TILEPRESS_T_MAX},
            )
        return cleaned


class LdpForm(forms.Form):
    t_grid = forms.Field(required=False)
    alphas = ListField(StrictFloatField(), required=False)
    alpha_fractions = ListField(
        StrictFloatField(min_value=-0.999999, max_value=0.999999), required=False
    )
    rate_points = StrictIntegerField(required=False, min_value=1)
    e0 = forms.ChoiceField(choices=EDGE_CHOICES, required=False)
    n_range = ListField(StrictIntegerField(min_value=1), length=2, required=False)

    def clean_t_grid(self):
        value = self.cleaned_data.get("t_grid") or {}
        if not isinstance(value, dict):
            raise ValidationError("Expected an object with start, stop and num.", code="invalid")
        form = TGridForm(data=value)
        unknown = set(value) - set(form.fields)
        if unknown:
            raise ValidationError(
                "Unknown keys: %(keys)s.",
                code="unknown",
                params={"keys": ", ".join(sorted(unknown))},
            )
        if not form.is_valid():
            raise ValidationError(
                "; ".join(
                    "{0}: {1}".format(key, " ".join(messages))
                    for key, messages in sorted(form.errors.items())
                )
            )
        return {key: form.cleaned_data[key] for key in ("start", "stop", "num")}

    def clean_alpha_fractions(self):
        return self.cleaned_data.get("alpha_fractions") or [-0.6, 0.6]

    def clean_rate_points(self):
        value = self.cleaned_data.get("rate_points")
        return 20 if value is None else value

    def clean_e0(self):
        return self.cleaned_data.get("e0") or EdgeLabel.BOTTOM.value

    def clean_n_range(self):
        value = self.cleaned_data.get("n_range")
        if not value:
            return [3, 7]
        if value[0] > value[1]:
            raise ValidationError("n_range should be increasing.", code="order")
        return value


class OutputForm(forms.Form):
    directory = forms.CharField(required=False)
    formats = forms.MultipleChoiceField(choices=FORMAT_CHOICES, required=False)

    def clean_directory(self):
        return self.cleaned_data.get("directory") or "tilepress-out"

    def clean_formats(self):
        return sorted(self.cleaned_data.get("formats") or ["csv", "json"])
