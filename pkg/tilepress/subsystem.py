"""
Subsystems of the pillow map: a chosen set of 1-tiles and the dynamics restricted to it.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from tilepress import appsettings
from tilepress.cells import build_tiles, count_matrix
from tilepress.exceptions import PreconditionError
from tilepress.pillow import Color, OneTileLabel, apply_map_array

logger = logging.getLogger(__name__)

__all__ = (
    "PRESETS",
    "Subsystem",
    "TileMatrix",
    "ClassifyResult",
    "LimitSetSample",
    "tile_matrix",
    "spectral_radius",
    "entropy",
    "classify",
    "classify_cells",
    "interior_witness_counts",
    "limit_set_sample",
    "forward_invariance_violations",
)

PRESETS = ("full", "carpet", "corner", "cantor", "cross")


def _preset_labels(spec, name):
    m = spec.m
    if name == "full":
        return spec.labels()
    if name == "carpet":
        if m != 3:
            raise PreconditionError("The carpet preset is defined for m=3")
        return [t for t in spec.labels() if (t.i, t.j) != (1, 1)]
    if name == "corner":
        return [OneTileLabel(Color.WHITE, 0, 0)]
    if name == "cantor":
        if m % 2 == 0:
            raise PreconditionError("The cantor preset needs an odd m")
        return [OneTileLabel(Color.WHITE, 0, 0), OneTileLabel(Color.WHITE, m - 1, 0)]
    if name == "cross":
        return [OneTileLabel(Color.WHITE, 1, 0)]
    raise PreconditionError(
        "Unknown subsystem preset {0!r}, expected one of {1}".format(name, ", ".join(PRESETS))
    )


@dataclass(frozen=True)
class Subsystem:
    """
    A set of 1-tile labels; their union is the domain of the subsystem.
    """

    labels: frozenset
    name: str = "custom"

    @classmethod
    def preset(cls, spec, name):
        return cls(frozenset(_preset_labels(spec, name)), name)

    @classmethod
    def full(cls, spec):
        return cls.preset(spec, "full")

    @classmethod
    def from_triples(cls, spec, triples, name="custom"):
        """
        Build a subsystem from ``(face, i, j)`` triples, as found in run configurations.
        """
        labels = frozenset(
            OneTileLabel(Color.parse(face), int(i), int(j)) for face, i, j in triples
        )
        return cls(labels, name).validate(spec)

    def validate(self, spec):
        if not self.labels:
            raise PreconditionError("A subsystem needs at least one 1-tile")
        for label in self.labels:
            label.validate(spec)
        return self

    def is_full(self, spec):
        return len(self.labels) == 2 * spec.degree

    def sorted_labels(self):
        return sorted(self.labels)

    def as_triples(self):
        return [
            [label.home_face.name.lower(), label.i, label.j] for label in self.sorted_labels()
        ]


def spectral_radius(matrix):
    """
    Closed-form spectral radius of a nonnegative 2x2 matrix.
    """
    (a, b), (c, d) = matrix
    trace = a + d
    discriminant = max((a - d) * (a - d) + 4 * b * c, 0)
    return (trace + math.sqrt(discriminant)) / 2.0


@dataclass(frozen=True)
class TileMatrix:
    """
    Counts of 1-tiles by position (rows) and color (columns), white first.
    """

    matrix: tuple

    def __pow__(self, n):
        result = [[1, 0], [0, 1]]
        for _ in range(n):
            result = [
                [sum(result[i][k] * self.matrix[k][j] for k in range(2)) for j in range(2)]
                for i in range(2)
            ]
        return TileMatrix(tuple(tuple(row) for row in result))

    def as_list(self):
        return [list(row) for row in self.matrix]

    @property
    def total(self):
        return sum(map(sum, self.matrix))

    @property
    def rho(self):
        return spectral_radius(self.matrix)


def tile_matrix(spec, sub):
    sub.validate(spec)
    return TileMatrix(tuple(tuple(row) for row in count_matrix(sub.labels)))


def entropy(A):
    """
    Topological entropy ``log ρ(A)``; ``-inf`` for a nilpotent matrix.
    """
    if A.total == 0:
        raise PreconditionError("The tile matrix is zero")
    rho = A.rho
    if rho <= 0.0:
        return -math.inf
    return math.log(rho)


@dataclass
class ClassifyResult:
    irreducible: bool
    primitive: bool
    strongly_irreducible: bool
    strongly_primitive: bool
    n_F: int = None
    n_F_kind: str = None
    search_cap: int = None
    witness_levels: dict = field(default_factory=dict)
    note: str = ""

    def as_dict(self):
        return {
            "irreducible": self.irreducible,
            "primitive": self.primitive,
            "strongly_irreducible": self.strongly_irreducible,
            "strongly_primitive": self.strongly_primitive,
            "n_F": self.n_F,
            "n_F_kind": self.n_F_kind,
            "search_cap": self.search_cap,
            "note": self.note,
        }


def _boolean_powers(A, count):
    current = np.array(A.matrix) > 0
    step = current.copy()
    powers = [current]
    for _ in range(count - 1):
        current = (current.astype(int) @ step.astype(int)) > 0
        powers.append(current)
    return powers


def _side_rule(m, k):
    # Map a cell index to (new lower side -> old side, new upper side -> old side);
    # sides are 0 for the lower and 1 for the upper edge.
    lower = 0 if k == 0 else None
    upper = (1 if k % 2 == 0 else 0) if k == m - 1 else None
    return lower, upper


def _label_groups(m, labels):
    groups = Counter()
    for label in labels:
        key = (
            int(label.home_face),
            int(label.color),
            _side_rule(m, label.i),
            _side_rule(m, label.j),
        )
        groups[key] += 1
    return groups


def _box_groups(m, face, a, b):
    # Same grouping as _label_groups, for cells given as arrays.
    face = np.asarray(face, dtype=np.int64)
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    color = np.where((a + b) % 2 == 0, face, 1 - face)

    def rule_code(k):
        # lower code 1 when the cell is first; upper code 1 + old side when it is last.
        upper = np.where(k == m - 1, np.where(k % 2 == 0, 2, 1), 0)
        return (k == 0) * 3 + upper

    keys = ((face * 2 + color) * 6 + rule_code(a)) * 6 + rule_code(b)
    unique, counts = np.unique(keys, return_counts=True)
    groups = Counter()
    for key, count in zip(unique.tolist(), counts.tolist()):
        rest, y_code = divmod(key, 6)
        rest, x_code = divmod(rest, 6)
        home, color_value = divmod(rest, 2)
        groups[(home, color_value, _decode_rule(x_code), _decode_rule(y_code))] += count
    return groups


def _decode_rule(code):
    lower, upper = divmod(code, 3)
    return (0 if lower else None), (upper - 1 if upper else None)


def _witness_counts(groups, n_cap):
    # A side set is a 4-bit mask: bit 0 left, 1 right, 2 bottom, 3 top.
    states = Counter({(0, 0, 0b1111): 1, (1, 1, 0b1111): 1})
    result = {}
    for level in range(1, n_cap + 1):
        new_states = Counter()
        for (position, color, sides), count in states.items():
            for (home, label_color, x_rule, y_rule), multiplicity in groups.items():
                if label_color != position:
                    continue
                touched = 0
                for bit, old_side in enumerate(x_rule + y_rule):
                    shift = 0 if bit < 2 else 2
                    if old_side is not None and sides & (1 << (old_side + shift)):
                        touched |= 1 << bit
                new_states[(home, color, touched)] += count * multiplicity
        states = new_states
        counts = [[0, 0], [0, 0]]
        for (position, color, sides), count in states.items():
            if sides == 0:
                counts[position][color] += count
        result[level] = counts
    return result


def interior_witness_counts(spec, sub, n_cap):
    """
    Count, for each level up to ``n_cap``, the tiles of each (position, color) lying in
    the interior of their face.

    Dynamic programming over (position, color, touched sides) states, so the cost does
    not grow with the number of tiles.

    :returns: ``{level: [[count]]}`` indexed ``[position][color]``.
    """
    return _witness_counts(_label_groups(spec.m, sub.labels), n_cap)


def _classify(groups, A, n_cap, name):
    if n_cap < 1:
        raise PreconditionError("Search cap should be at least 1, got {0}".format(n_cap))
    powers = _boolean_powers(A, 4)
    reachable = np.logical_or.reduce(powers)
    irreducible = bool(reachable.all())
    primitive = any(bool(power.all()) for power in powers)

    witnesses = _witness_counts(groups, n_cap)
    levels = {}
    for position in Color:
        for color in Color:
            levels[(color.name.lower(), position.name.lower())] = [
                level for level, counts in witnesses.items() if counts[position][color] > 0
            ]

    result = ClassifyResult(
        irreducible=irreducible,
        primitive=primitive,
        strongly_irreducible=False,
        strongly_primitive=False,
        search_cap=n_cap,
        witness_levels=levels,
    )
    if irreducible and all(levels.values()):
        result.strongly_irreducible = True
        result.n_F = max(min(found) for found in levels.values())
        result.n_F_kind = "irreducible"
    if primitive and result.strongly_irreducible:
        full_levels = [
            level for level in witnesses if all(level in found for found in levels.values())
        ]
        threshold = None
        for level in sorted(full_levels, reverse=True):
            if threshold is not None and level != threshold - 1:
                break
            threshold = level
        if threshold is not None and n_cap in full_levels:
            result.strongly_primitive = True
            result.n_F = threshold
            result.n_F_kind = "primitive"
    if not result.strongly_primitive:
        result.note = "strong primitivity unknown at search cap {0}".format(n_cap)
        if not result.strongly_irreducible:
            result.note = "strong irreducibility unknown at search cap {0}".format(n_cap)
        logger.warning("Subsystem %s: %s", name, result.note)
    logger.info(
        "Classified subsystem %s: irreducible=%s primitive=%s strong=%s/%s n_F=%s",
        name,
        result.irreducible,
        result.primitive,
        result.strongly_irreducible,
        result.strongly_primitive,
        result.n_F,
    )
    return result


def classify(spec, sub, n_cap=None):
    """
    Decide irreducibility and primitivity of a subsystem, weak and strong.

    Weak properties follow exactly from the tile matrix. Strong properties are searched
    up to ``n_cap`` levels; a negative answer means "unknown at the cap".

    :rtype: ClassifyResult
    """
    n_cap = appsettings.TILEPRESS_CLASSIFY_CAP if n_cap is None else n_cap
    return _classify(_label_groups(spec.m, sub.labels), tile_matrix(spec, sub), n_cap, sub.name)


def classify_cells(spec, face, a, b, n_cap=None, name="cells"):
    """
    :func:`classify` for the subsystem made of the cells ``(face, a, b)``, given as arrays.
    """
    n_cap = appsettings.TILEPRESS_CLASSIFY_CAP if n_cap is None else n_cap
    if not len(face):
        raise PreconditionError("A subsystem needs at least one 1-tile")
    groups = _box_groups(spec.m, face, a, b)
    counts = [[0, 0], [0, 0]]
    for (home, color, _x, _y), count in groups.items():
        counts[home][color] += count
    return _classify(groups, TileMatrix(tuple(tuple(row) for row in counts)), n_cap, name)


@dataclass
class LimitSetSample:
    """
    The union of the level-n tiles of a subsystem, an outer approximation of its limit set.
    """

    n: int
    face: np.ndarray
    a: np.ndarray
    b: np.ndarray
    side: Fraction

    def __len__(self):
        return len(self.face)

    @property
    def area(self):
        return len(self) * self.side * self.side

    def occupancy(self):
        scale = self.side.denominator
        grid = np.zeros((2, scale, scale), dtype=bool)
        grid[self.face, self.a, self.b] = True
        return grid

    def contains(self, finer):
        """
        Whether every box of a deeper sample lies inside a box of this one.
        """
        ratio = finer.side.denominator // self.side.denominator
        return bool(self.occupancy()[finer.face, finer.a // ratio, finer.b // ratio].all())


def limit_set_sample(spec, sub, n, capacity=None):
    sub.validate(spec)
    block = build_tiles(spec, sub, n, capacity=capacity)
    return LimitSetSample(
        n=n,
        face=block.position.astype(np.int64),
        a=block.a,
        b=block.b,
        side=Fraction(1, spec.m**n),
    )


def forward_invariance_violations(spec, sub, n, capacity=None):
    """
    Map the center of every (n+1)-tile forward and count those landing outside the
    union of n-tiles.
    """
    finer = build_tiles(spec, sub, n + 1, capacity=capacity)
    coarse = limit_set_sample(spec, sub, n, capacity=capacity).occupancy()
    cx, cy = finer.centers()
    face, x, y = apply_map_array(spec, finer.position, cx, cy)
    scale = spec.m**n
    a = np.minimum((x * scale).astype(np.int64), scale - 1)
    b = np.minimum((y * scale).astype(np.int64), scale - 1)
    return int((~coarse[face, a, b]).sum())
