"""
The checkerboard pillow maps.

The sphere is the pillow: two unit squares (the white and the black face) glued along
their boundary by the identity on coordinates. The boundary is the invariant Jordan
curve, its four corners are the postcritical points. The map with subdivision factor
``m`` cuts each face into ``m x m`` cells and folds every cell onto one of the two faces.
"""
import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

from tilepress.exceptions import CapacityError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

__all__ = (
    "Color",
    "MapSpec",
    "PillowPoint",
    "OneTileLabel",
    "Potential",
    "BASIS_NAMES",
    "canonicalize_point",
    "face_center",
    "apply_map",
    "apply_map_array",
    "inverse_branch",
    "path_distance",
    "path_distance_array",
    "eval_potential",
    "iterate_spec",
    "measure_diameter",
)

SNAP_TOL = 1e-12
DOMAIN_TOL = 1e-9
SQRT2 = math.sqrt(2.0)
MAX_SUBDIVISION = 2**31 - 1


class Color(IntEnum):
    """
    The two 0-tiles. The integer value is the index used in every 2x2 matrix.
    """

    WHITE = 0
    BLACK = 1

    @property
    def opposite(self):
        return Color(1 - self)

    @property
    def sign(self):
        return 1 if self is Color.WHITE else -1

    @classmethod
    def parse(cls, value):
        if isinstance(value, Color):
            return value
        try:
            return {"white": cls.WHITE, "w": cls.WHITE, "black": cls.BLACK, "b": cls.BLACK}[
                str(value).lower()
            ]
        except KeyError:
            raise PreconditionError("Unknown color {0!r}".format(value))


@dataclass(frozen=True)
class MapSpec:
    """
    The pillow map with subdivision factor ``m``.
    """

    m: int

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise PreconditionError(
                "Subdivision factor should be an integer >= 2, got {0!r}".format(self.m)
            )

    @property
    def degree(self):
        return self.m * self.m

    @property
    def expansion(self):
        return float(self.m)

    def labels(self):
        """
        All 1-tile labels in address order.
        """
        return [
            OneTileLabel(face, i, j)
            for face in Color
            for i in range(self.m)
            for j in range(self.m)
        ]


@dataclass(frozen=True)
class PillowPoint:
    face: Color
    x: float
    y: float

    @property
    def on_equator(self):
        return self.x in (0, 1) or self.y in (0, 1)

    def on_face(self, face):
        """
        Whether the point lies on the closed 0-tile ``face``.
        """
        return self.face == face or self.on_equator


@dataclass(frozen=True, order=True)
class OneTileLabel:
    """
    Cell ``(i, j)`` of the face ``home_face``: a 1-tile.
    Its position is the home face, its color the face the map folds it onto.
    """

    home_face: Color
    i: int
    j: int

    @property
    def color(self):
        return self.home_face if (self.i + self.j) % 2 == 0 else self.home_face.opposite

    @property
    def position(self):
        return self.home_face

    def validate(self, spec):
        if not (0 <= self.i < spec.m and 0 <= self.j < spec.m):
            raise PreconditionError(
                "Label {0} is not a cell of the m={1} map".format(self, spec.m)
            )
        return self


def _snap(value):
    if isinstance(value, Fraction):
        if value < -DOMAIN_TOL or value > 1 + DOMAIN_TOL:
            raise DomainError("Coordinate {0} outside the unit square".format(value))
        return min(max(value, Fraction(0)), Fraction(1))
    value = float(value)
    if not (-DOMAIN_TOL <= value <= 1 + DOMAIN_TOL):
        raise DomainError("Coordinate {0!r} outside the unit square".format(value))
    if value < SNAP_TOL:
        return 0.0
    if value > 1 - SNAP_TOL:
        return 1.0
    return value


def canonicalize_point(face, x, y):
    """
    Return the canonical representative of a point: boundary points live on the white face.

    :param face: the face color, a :class:`Color` or ``"white"``/``"black"``.
    :param x: first coordinate, a float or :class:`~fractions.Fraction`.
    :param y: second coordinate.
    :rtype: PillowPoint
    """
    face = Color.parse(face)
    x = _snap(x)
    y = _snap(y)
    if x in (0, 1) or y in (0, 1):
        face = Color.WHITE
    return PillowPoint(face, x, y)


def face_center(color):
    return PillowPoint(Color.parse(color), 0.5, 0.5)


def _reflect(k, u):
    return u if k % 2 == 0 else 1 - u


def _fold(m, u):
    i = min(int(math.floor(u * m)), m - 1)
    return i, _reflect(i, u * m - i)


def apply_map(spec, p):
    """
    Apply the pillow map to a canonical point.
    Exact for :class:`~fractions.Fraction` coordinates.
    """
    i, u = _fold(spec.m, p.x)
    j, v = _fold(spec.m, p.y)
    face = p.face if (i + j) % 2 == 0 else p.face.opposite
    return canonicalize_point(face, u, v)


def apply_map_array(spec, face, x, y):
    """
    Vectorized :func:`apply_map` over arrays of face indices and coordinates.

    :returns: ``(face, x, y)`` arrays, canonicalized.
    """
    m = spec.m
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i = np.minimum(np.floor(x * m).astype(np.int64), m - 1)
    j = np.minimum(np.floor(y * m).astype(np.int64), m - 1)
    u = x * m - i
    v = y * m - j
    u = np.where(i % 2 == 0, u, 1.0 - u)
    v = np.where(j % 2 == 0, v, 1.0 - v)
    face = np.where((i + j) % 2 == 0, face, 1 - np.asarray(face))
    u = np.clip(u, 0.0, 1.0)
    v = np.clip(v, 0.0, 1.0)
    boundary = (u == 0.0) | (u == 1.0) | (v == 0.0) | (v == 1.0)
    face = np.where(boundary, int(Color.WHITE), face)
    return face.astype(np.int8), u, v


def inverse_branch(spec, t, p):
    """
    The inverse of the map restricted to the 1-tile ``t``, applied to ``p``.

    :raises PreconditionError: when ``p`` is not on the 0-tile of the label's color.
    """
    t.validate(spec)
    if not p.on_face(t.color):
        raise PreconditionError(
            "Point on the {0} face is not in the image of the {1} tile {2}".format(
                p.face.name.lower(), t.color.name.lower(), t
            )
        )
    x = (t.i + _reflect(t.i, p.x)) / spec.m
    y = (t.j + _reflect(t.j, p.y)) / spec.m
    return canonicalize_point(t.home_face, x, y)


def _crossing(a1, b1, a2, b2):
    # Shortest path between (a1, b1) and (a2, b2) on opposite sides of the line a = 0,
    # crossing it inside the edge 0 <= b <= 1.
    total = a1 + a2
    if total <= 0:
        return abs(b1 - b2)
    t = b1 + (b2 - b1) * a1 / total
    t = min(max(t, 0.0), 1.0)
    return math.hypot(a1, b1 - t) + math.hypot(a2, b2 - t)


def path_distance(p, q):
    """
    Geodesic distance on the pillow.

    Points on a common closed face are joined by a straight segment. Points on
    opposite faces use the shortest path crossing one boundary edge.
    """
    px, py, qx, qy = float(p.x), float(p.y), float(q.x), float(q.y)
    if p.face == q.face or p.on_equator or q.on_equator:
        return math.hypot(px - qx, py - qy)
    return min(
        _crossing(px, py, qx, qy),
        _crossing(1 - px, py, 1 - qx, qy),
        _crossing(py, px, qy, qx),
        _crossing(1 - py, px, 1 - qy, qx),
    )


def _crossing_array(a1, b1, a2, b2):
    total = a1 + a2
    safe = np.where(total > 0, total, 1.0)
    t = np.clip(b1 + (b2 - b1) * a1 / safe, 0.0, 1.0)
    return np.hypot(a1, b1 - t) + np.hypot(a2, b2 - t)


def path_distance_array(face1, x1, y1, face2, x2, y2):
    """
    Vectorized :func:`path_distance` (with broadcasting).
    """
    x1, y1, x2, y2 = (np.asarray(a, dtype=float) for a in (x1, y1, x2, y2))
    straight = np.hypot(x1 - x2, y1 - y2)
    crossed = np.minimum.reduce(
        [
            _crossing_array(x1, y1, x2, y2),
            _crossing_array(1 - x1, y1, 1 - x2, y2),
            _crossing_array(y1, x1, y2, x2),
            _crossing_array(1 - y1, x1, 1 - y2, x2),
        ]
    )

    def on_edge(x, y):
        return (x == 0) | (x == 1) | (y == 0) | (y == 1)

    same = (np.asarray(face1) == np.asarray(face2)) | on_edge(x1, y1) | on_edge(x2, y2)
    return np.where(same, straight, crossed)


# Basis of gluing-compatible functions: (evaluator, Lipschitz constant, sup norm).
# The evaluator takes the face sign s (+1 white, -1 black) and coordinates.
_TWO_PI = 2 * math.pi
_BASIS = {
    "const": (lambda s, x, y: np.ones_like(x), 0.0, 1.0),
    "cos_cos": (lambda s, x, y: np.cos(_TWO_PI * x) * np.cos(_TWO_PI * y), _TWO_PI, 1.0),
    "cos_x": (lambda s, x, y: np.cos(_TWO_PI * x), _TWO_PI, 1.0),
    "cos_y": (lambda s, x, y: np.cos(_TWO_PI * y), _TWO_PI, 1.0),
    "signed_sin": (lambda s, x, y: s * np.sin(math.pi * x) * np.sin(math.pi * y), math.pi, 1.0),
    "signed_bump": (lambda s, x, y: s * x * (1 - x) * y * (1 - y), SQRT2 / 4, 1.0 / 16),
}

# Breaks the gluing: only accepted with allow_discontinuous, as a negative control.
_DISCONTINUOUS = {
    "signed_const": (lambda s, x, y: s * np.ones_like(x), 0.0, 1.0),
}

BASIS_NAMES = tuple(_BASIS)
ALIASES = {"g1": "cos_cos", "g2": "signed_sin"}


@dataclass(frozen=True)
class Potential:
    """
    A Hölder potential, a linear combination of the basis functions.

    ``coefficients`` holds ``(name, value)`` pairs in basis order.
    """

    coefficients: tuple = ()
    kappa: float = 1.0
    allow_discontinuous: bool = False

    def __post_init__(self):
        if not (0 < self.kappa <= 1):
            raise PreconditionError(
                "Hölder exponent should be in (0, 1], got {0!r}".format(self.kappa)
            )
        known = dict(_BASIS)
        if self.allow_discontinuous:
            known.update(_DISCONTINUOUS)
        for name, _value in self.coefficients:
            if name not in known:
                raise PreconditionError("Unknown potential basis element {0!r}".format(name))

    @classmethod
    def from_mapping(cls, coefficients=None, kappa=1.0, allow_discontinuous=False):
        """
        Build a potential from ``{name: coefficient}``; ``g1``/``g2`` are accepted aliases.
        """
        merged = {}
        for name, value in (coefficients or {}).items():
            name = ALIASES.get(name, name)
            merged[name] = merged.get(name, 0.0) + float(value)
        order = BASIS_NAMES + tuple(_DISCONTINUOUS)
        pairs = tuple((name, merged[name]) for name in order if merged.get(name, 0.0) != 0.0)
        unknown = set(merged) - set(order)
        if unknown:
            raise PreconditionError(
                "Unknown potential basis elements: {0}".format(sorted(unknown))
            )
        return cls(pairs, float(kappa), allow_discontinuous)

    @classmethod
    def zero(cls, kappa=1.0):
        return cls((), kappa)

    def as_mapping(self):
        return dict(self.coefficients)

    def scaled(self, t):
        return Potential(
            tuple((name, value * t) for name, value in self.coefficients if value * t != 0.0),
            self.kappa,
            self.allow_discontinuous,
        )

    @property
    def is_zero(self):
        return not self.coefficients

    @property
    def is_continuous(self):
        return all(name in _BASIS for name, _value in self.coefficients)

    def _terms(self):
        for name, value in self.coefficients:
            yield (_BASIS.get(name) or _DISCONTINUOUS[name]), value

    @property
    def lipschitz(self):
        return sum(abs(value) * term[1] for term, value in self._terms())

    @property
    def holder_seminorm(self):
        """
        Upper bound of the κ-Hölder seminorm for the path metric.
        A Lipschitz function on a space of diameter D has ``|φ|_κ <= L D^(1-κ)``.
        """
        return self.lipschitz * SQRT2 ** (1 - self.kappa)

    @property
    def sup_norm(self):
        return sum(abs(value) * term[2] for term, value in self._terms())

    def evaluate(self, face, x, y):
        """
        Evaluate on arrays of face indices and coordinates.
        """
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sign = np.where(np.asarray(face) == int(Color.WHITE), 1.0, -1.0)
        out = np.zeros(np.broadcast(x, y, sign).shape)
        for term, value in self._terms():
            out = out + value * term[0](sign, x, y)
        return out


def eval_potential(pot, p):
    return float(pot.evaluate(int(p.face), float(p.x), float(p.y)))


def iterate_spec(spec, k):
    """
    The ``k``-th iterate of the pillow map is the pillow map with factor ``m**k``.
    """
    if k < 1:
        raise PreconditionError("Iterate should be positive, got {0}".format(k))
    m = spec.m**k
    if m > MAX_SUBDIVISION:
        raise CapacityError(
            "Iterate {0} of the m={1} map overflows the subdivision range".format(k, spec.m),
            count=m,
            capacity=MAX_SUBDIVISION,
        )
    return MapSpec(m)


def measure_diameter(resolution=21):
    """
    Grid search of the pillow diameter, cross-face geodesics included.
    """
    grid = np.linspace(0.0, 1.0, resolution)
    gx, gy = np.meshgrid(grid, grid, indexing="ij")
    gx = gx.ravel()
    gy = gy.ravel()
    cross = path_distance_array(
        int(Color.WHITE), gx[:, None], gy[:, None], int(Color.BLACK), gx[None, :], gy[None, :]
    )
    same = np.hypot(gx[:, None] - gx[None, :], gy[:, None] - gy[None, :])
    diameter = float(max(cross.max(), same.max()))
    logger.debug("Pillow diameter at resolution %d: %.12f", resolution, diameter)
    return diameter
