"""
Cell decompositions of the pillow maps and their subsystems.

An n-tile of a subsystem is addressed by an admissible word of 1-tile labels. Tiles are
built level by level by prepending letters, which keeps the address order lexicographic
and lets Birkhoff sums ride along: the k-th image of a tile center is the center of the
tile addressed by the word with its first k letters removed.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from tilepress import appsettings
from tilepress.exceptions import CapacityError, InvariantViolation, PreconditionError
from tilepress.pillow import SQRT2, Color, OneTileLabel, PillowPoint, canonicalize_point

logger = logging.getLogger(__name__)

__all__ = (
    "EdgeLabel",
    "TileAddress",
    "TileRegion",
    "TileBlock",
    "LocalDegreeMatrix",
    "color_of",
    "count_matrix",
    "level_counts",
    "build_tiles",
    "enumerate_tiles",
    "tile_region",
    "address_of_box",
    "local_degree_matrix",
    "pair_partner",
    "pair_table",
    "format_word",
)


class EdgeLabel(Enum):
    """
    The four 0-edges of the equator; each joins two postcritical corners.
    """

    BOTTOM = "bottom"
    RIGHT = "right"
    TOP = "top"
    LEFT = "left"

    @property
    def is_horizontal(self):
        return self in (EdgeLabel.BOTTOM, EdgeLabel.TOP)

    @property
    def level(self):
        # The fixed coordinate of the edge.
        return 0 if self in (EdgeLabel.BOTTOM, EdgeLabel.LEFT) else 1


@dataclass(frozen=True)
class TileAddress:
    word: tuple

    @property
    def n(self):
        return len(self.word)

    @property
    def color(self):
        return self.word[-1].color

    @property
    def position(self):
        return self.word[0].position

    def validate(self, spec):
        if not self.word:
            raise PreconditionError("An address needs at least one letter")
        for letter in self.word:
            letter.validate(spec)
        for first, second in zip(self.word, self.word[1:]):
            if second.position != first.color:
                raise PreconditionError(
                    "Inadmissible address {0}: {1} does not lie on the {2} face".format(
                        format_word(self.word), second, first.color.name.lower()
                    )
                )
        return self

    def __str__(self):
        return format_word(self.word)


@dataclass(frozen=True)
class TileRegion:
    face: Color
    a: Fraction
    b: Fraction
    side: Fraction
    center: PillowPoint
    diameter: float
    touches_equator: bool

    def contains_box(self, other):
        return (
            self.face == other.face
            and self.a <= other.a
            and self.b <= other.b
            and other.a + other.side <= self.a + self.side
            and other.b + other.side <= self.b + self.side
        )


@dataclass(frozen=True)
class LocalDegreeMatrix:
    """
    Counts of n-tiles containing a point, rows by position and columns by color.
    With this layout ``Deg^(n+k)(x) = Deg^n(x) @ Deg^k(f^n(x))``.
    """

    matrix: tuple

    def entry(self, color, position):
        return self.matrix[int(position)][int(color)]

    @property
    def total(self):
        return sum(sum(row) for row in self.matrix)

    def degree(self, color):
        """
        Number of tiles of the given color containing the point.
        """
        return sum(row[int(color)] for row in self.matrix)

    def __matmul__(self, other):
        return LocalDegreeMatrix(tuple(tuple(row) for row in _mat_mul(self.matrix, other.matrix)))


def color_of(t):
    """
    Return the ``(color, position)`` classification of a 1-tile label.
    """
    return t.color, t.position


def format_word(word):
    return ".".join(
        "{0}{1}-{2}".format("w" if t.home_face is Color.WHITE else "b", t.i, t.j) for t in word
    )


def _labels(spec, sub):
    if sub is None:
        return spec.labels()
    labels = sorted(sub.labels)
    for label in labels:
        label.validate(spec)
    return labels


def count_matrix(labels):
    """
    Number of labels per (position, color): the one-step tile counts.
    """
    counts = [[0, 0], [0, 0]]
    for label in labels:
        counts[int(label.position)][int(label.color)] += 1
    return counts


def _mat_mul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def level_counts(spec, sub, n):
    """
    Exact number of n-tiles per (position, color), as Python integers.
    """
    step = count_matrix(_labels(spec, sub))
    result = [[1, 0], [0, 1]]
    for _ in range(n):
        result = _mat_mul(result, step)
    return result


def check_capacity(spec, sub, n, capacity=None):
    """
    Raise :class:`CapacityError` when level ``n`` holds more tiles than allowed.
    """
    capacity = appsettings.TILEPRESS_CAPACITY if capacity is None else capacity
    count = sum(map(sum, level_counts(spec, sub, n)))
    if count > capacity:
        suggested = n - 1
        while suggested > 0 and sum(map(sum, level_counts(spec, sub, suggested))) > capacity:
            suggested -= 1
        raise CapacityError(
            "Level {0} has {1} tiles, above the capacity of {2}; try n <= {3}".format(
                n, count, capacity, suggested
            ),
            count=count,
            capacity=capacity,
            suggested_level=suggested,
        )
    return count


@dataclass
class TileBlock:
    """
    All n-tiles of a subsystem as parallel arrays, in address order.

    The tile maps the 0-tile of its color onto its box by
    ``x -> (sx * x + ox) / m**n`` and ``y -> (sy * y + oy) / m**n``.
    """

    m: int
    n: int
    position: np.ndarray
    color: np.ndarray
    ox: np.ndarray
    sx: np.ndarray
    oy: np.ndarray
    sy: np.ndarray
    words: np.ndarray = None
    birkhoff: np.ndarray = None
    tail: np.ndarray = None

    def __len__(self):
        return len(self.position)

    @property
    def scale(self):
        return self.m**self.n

    @property
    def a(self):
        return np.where(self.sx > 0, self.ox, self.ox - 1)

    @property
    def b(self):
        return np.where(self.sy > 0, self.oy, self.oy - 1)

    def centers(self):
        denominator = 2.0 * self.scale
        return (2 * self.ox + self.sx) / denominator, (2 * self.oy + self.sy) / denominator

    def map_points(self, u, v):
        """
        Images of face coordinates ``(u, v)`` under every tile branch, shape ``(N, K)``.
        """
        scale = float(self.scale)
        x = (self.sx[:, None] * np.asarray(u)[None, :] + self.ox[:, None]) / scale
        y = (self.sy[:, None] * np.asarray(v)[None, :] + self.oy[:, None]) / scale
        return x, y

    def touches_equator(self):
        a = self.a
        b = self.b
        last = self.scale - 1
        return (a == 0) | (a == last) | (b == 0) | (b == last)

    def address(self, index):
        return TileAddress(tuple(_decode(self.m, code) for code in self.words[index]))

    def box_index(self):
        """
        Lookup table ``[face, a, b] -> tile index`` (-1 where no tile).
        """
        side = self.scale
        table = np.full((2, side, side), -1, dtype=np.int64)
        table[self.position, self.a, self.b] = np.arange(len(self))
        return table


def _decode(m, code):
    face, rest = divmod(int(code), m * m)
    i, j = divmod(rest, m)
    return OneTileLabel(Color(face), i, j)


def _encode(m, label):
    return int(label.home_face) * m * m + label.i * m + label.j


def build_tiles(
    spec,
    sub,
    n,
    pot=None,
    samples=None,
    keep_words=False,
    tail_depth=None,
    capacity=None,
):
    """
    Build the n-tiles of a subsystem (``sub=None`` for the full map).

    :param pot: when given, Birkhoff sums ``S_n pot`` are accumulated.
    :param samples: face coordinates ``(u, v)`` at which the Birkhoff sums are taken
        (pulled back through each tile branch); defaults to the face center.
    :param keep_words: keep the letter codes, needed for addresses and dumps.
    :param tail_depth: record for each tile the index of its last ``tail_depth``
        letters within the level ``tail_depth`` enumeration.
    :rtype: TileBlock
    """
    if n < 0:
        raise PreconditionError("Level should be non-negative, got {0}".format(n))
    m = spec.m
    labels = _labels(spec, sub)
    if not labels:
        raise PreconditionError("Empty subsystem")
    check_capacity(spec, sub, n, capacity)

    if samples is None:
        su, sv = np.array([0.5]), np.array([0.5])
    else:
        su, sv = (np.asarray(a, dtype=float) for a in samples)

    position = np.array([Color.WHITE, Color.BLACK], dtype=np.int8)
    color = position.copy()
    ox = np.zeros(2, dtype=np.int64)
    oy = np.zeros(2, dtype=np.int64)
    sx = np.ones(2, dtype=np.int64)
    sy = np.ones(2, dtype=np.int64)
    words = np.zeros((2, 0), dtype=np.int32)
    birkhoff = np.zeros((2, len(su))) if pot is not None else None
    tail = None

    for level in range(n):
        scale = m**level
        chunks = []
        for label in labels:
            sel = np.flatnonzero(position == int(label.color))
            if not len(sel):
                continue
            flip_x = label.i % 2
            flip_y = label.j % 2
            sigma_x = -1 if flip_x else 1
            sigma_y = -1 if flip_y else 1
            chunk = {
                "sel": sel,
                "position": np.full(len(sel), int(label.home_face), dtype=np.int8),
                "color": color[sel],
                "ox": sigma_x * ox[sel] + (label.i + flip_x) * scale,
                "oy": sigma_y * oy[sel] + (label.j + flip_y) * scale,
                "sx": sigma_x * sx[sel],
                "sy": sigma_y * sy[sel],
            }
            if keep_words:
                code = np.full((len(sel), 1), _encode(m, label), dtype=np.int32)
                chunk["words"] = np.hstack([code, words[sel]])
            chunks.append(chunk)
        if not chunks:
            # Nilpotent subsystem: no tile survives this level.
            none = np.zeros(0, dtype=np.int64)
            chunks.append(
                {
                    "sel": none,
                    "position": position[none],
                    "color": color[none],
                    "ox": ox[none],
                    "oy": oy[none],
                    "sx": sx[none],
                    "sy": sy[none],
                    "words": np.zeros((0, words.shape[1] + 1), dtype=np.int32),
                }
            )

        def gather(key):
            return np.concatenate([chunk[key] for chunk in chunks])

        sel = gather("sel")
        position, color = gather("position"), gather("color")
        ox, oy, sx, sy = gather("ox"), gather("oy"), gather("sx"), gather("sy")
        if keep_words:
            words = gather("words")
        if tail is not None:
            tail = tail[sel]
        elif tail_depth is not None and level + 1 >= tail_depth:
            tail = np.arange(len(sel))
        if pot is not None:
            new_scale = float(scale * m)
            x = (sx[:, None] * su[None, :] + ox[:, None]) / new_scale
            y = (sy[:, None] * sv[None, :] + oy[:, None]) / new_scale
            birkhoff = pot.evaluate(position[:, None], x, y) + birkhoff[sel]
        logger.debug("Level %d: %d tiles", level + 1, len(position))

    if tail_depth is not None and tail is None:
        tail = np.arange(len(position))
    if birkhoff is not None and samples is None:
        birkhoff = birkhoff[:, 0]
    return TileBlock(
        m=m,
        n=n,
        position=position,
        color=color,
        ox=ox,
        sx=sx,
        oy=oy,
        sy=sy,
        words=words if keep_words else None,
        birkhoff=birkhoff,
        tail=tail,
    )


def enumerate_tiles(spec, sub, n, capacity=None):
    """
    Stream the n-tile addresses of a subsystem in lexicographic order.

    The level n - 1 block is built once and shared by every first letter.
    """
    if n < 1:
        raise PreconditionError("Level should be at least 1, got {0}".format(n))
    check_capacity(spec, sub, n, capacity)
    labels = _labels(spec, sub)
    if n == 1:
        for first in labels:
            yield TileAddress((first,))
        return
    rest = _RestrictedSubsystem(labels)
    block = build_tiles(spec, rest, n - 1, keep_words=True, capacity=capacity)
    for first in labels:
        for index in np.flatnonzero(block.position == int(first.color)):
            yield TileAddress((first,) + block.address(index).word)


class _RestrictedSubsystem:
    def __init__(self, labels):
        self.labels = frozenset(labels)


def _tile_map(spec, word):
    # Integer tile map (ox, sx, oy, sy) of an admissible word.
    m = spec.m
    ox, oy, sx, sy = 0, 0, 1, 1
    for level, label in enumerate(reversed(word)):
        scale = m**level
        flip_x, flip_y = label.i % 2, label.j % 2
        ox = (-ox if flip_x else ox) + (label.i + flip_x) * scale
        oy = (-oy if flip_y else oy) + (label.j + flip_y) * scale
        sx = -sx if flip_x else sx
        sy = -sy if flip_y else sy
    return ox, sx, oy, sy


def tile_region(spec, addr):
    """
    Geometry of the tile with address ``addr``.

    :rtype: TileRegion
    """
    addr.validate(spec)
    n = addr.n
    scale = spec.m**n
    ox, sx, oy, sy = _tile_map(spec, addr.word)
    a = ox if sx > 0 else ox - 1
    b = oy if sy > 0 else oy - 1
    side = Fraction(1, scale)
    center = canonicalize_point(
        addr.position, Fraction(2 * ox + sx, 2 * scale), Fraction(2 * oy + sy, 2 * scale)
    )
    return TileRegion(
        face=addr.position,
        a=Fraction(a, scale),
        b=Fraction(b, scale),
        side=side,
        center=center,
        diameter=SQRT2 / scale,
        touches_equator=a == 0 or b == 0 or a == scale - 1 or b == scale - 1,
    )


def address_of_box(spec, face, a, b, n):
    """
    Address of the full-map n-tile occupying box ``(a, b)`` of ``face``.
    """
    m = spec.m
    face = Color.parse(face)
    word = []
    for level in range(n, 0, -1):
        scale = m ** (level - 1)
        i, a = divmod(a, scale)
        j, b = divmod(b, scale)
        if i % 2:
            a = scale - 1 - a
        if j % 2:
            b = scale - 1 - b
        label = OneTileLabel(face, i, j)
        word.append(label)
        face = label.color
    return TileAddress(tuple(word))


def local_degree_matrix(spec, sub, p, n):
    """
    Count the n-tiles of a subsystem containing ``p``, by (position, color).

    Closed tiles are used, so a grid point belongs to all incident tiles.
    Coordinates are compared exactly as fractions.
    """
    if n < 1:
        raise PreconditionError("Level should be at least 1, got {0}".format(n))
    block = build_tiles(spec, sub, n)
    scale = block.scale
    x, y = Fraction(p.x), Fraction(p.y)
    a, b = block.a, block.b
    # Float prefilter, then exact checks on the few candidates.
    slack = 1e-9
    xs, ys = float(x) * scale, float(y) * scale
    near = (a - slack <= xs) & (xs <= a + 1 + slack) & (b - slack <= ys) & (ys <= b + 1 + slack)
    on_face = block.position == int(p.face)
    if p.on_equator:
        on_face = np.ones_like(on_face)
    counts = [[0, 0], [0, 0]]
    for index in np.flatnonzero(near & on_face):
        ai, bi = int(a[index]), int(b[index])
        if ai <= x * scale <= ai + 1 and bi <= y * scale <= bi + 1:
            counts[int(block.position[index])][int(block.color[index])] += 1
    return LocalDegreeMatrix(tuple(tuple(row) for row in counts))


def _edge_side(e0, ox, sx, oy, sy):
    # Numerator of the fixed coordinate of the n-edge mapped onto e0, and whether the
    # edge is the lower (left/bottom) side of the box.
    if e0.is_horizontal:
        o, s = oy, sy
    else:
        o, s = ox, sx
    fixed = o + s * e0.level
    lower = fixed == np.where(s > 0, o, o - 1)
    return fixed, lower


def pair_partner(spec, e0, black_addr):
    """
    The white n-tile sharing with ``black_addr`` the n-edge mapped onto ``e0``.

    :returns: ``(white_addr, (start, end))`` with the shared edge as two canonical points.
    """
    black_addr.validate(spec)
    if black_addr.color is not Color.BLACK:
        raise PreconditionError("Pairs start from a black tile, got {0}".format(black_addr))
    n = black_addr.n
    scale = spec.m**n
    ox, sx, oy, sy = _tile_map(spec, black_addr.word)
    a = ox if sx > 0 else ox - 1
    b = oy if sy > 0 else oy - 1
    fixed, lower = _edge_side(e0, ox, sx, oy, sy)
    face = black_addr.position
    step = -1 if lower else 1
    if e0.is_horizontal:
        na, nb = a, b + step
        start = (Fraction(a, scale), Fraction(int(fixed), scale))
        end = (Fraction(a + 1, scale), Fraction(int(fixed), scale))
    else:
        na, nb = a + step, b
        start = (Fraction(int(fixed), scale), Fraction(b, scale))
        end = (Fraction(int(fixed), scale), Fraction(b + 1, scale))
    if not (0 <= na < scale and 0 <= nb < scale):
        # Across the equator: the same box on the other face.
        na, nb, face = a, b, face.opposite
    white_addr = address_of_box(spec, face, na, nb, n)
    if white_addr.color is not Color.WHITE:
        raise InvariantViolation(
            "Neighbor {0} of {1} across the {2} edge is not white".format(
                white_addr, black_addr, e0.value
            )
        )
    edge = (
        canonicalize_point(black_addr.position, *start),
        canonicalize_point(black_addr.position, *end),
    )
    return white_addr, edge


def pair_table(block, e0):
    """
    Vectorized n-pairs of a full-map tile block.

    :returns: ``(black, white)`` index arrays into ``block``, ordered by black tile.
    """
    scale = block.scale
    expected = 2 * (block.m * block.m) ** block.n
    if len(block) != expected:
        raise PreconditionError("Pairs are defined on the full map tiles")
    black = np.flatnonzero(block.color == int(Color.BLACK))
    ox, sx, oy, sy = block.ox[black], block.sx[black], block.oy[black], block.sy[black]
    a, b = block.a[black], block.b[black]
    _fixed, lower = _edge_side(e0, ox, sx, oy, sy)
    step = np.where(lower, -1, 1)
    if e0.is_horizontal:
        na, nb = a, b + step
    else:
        na, nb = a + step, b
    face = block.position[black].astype(np.int64)
    outside = (na < 0) | (na >= scale) | (nb < 0) | (nb >= scale)
    na = np.where(outside, a, na)
    nb = np.where(outside, b, nb)
    face = np.where(outside, 1 - face, face)
    white = block.box_index()[face, na, nb]
    if (white < 0).any() or (block.color[white] != int(Color.WHITE)).any():
        raise InvariantViolation("Pair partner search failed at level {0}".format(block.n))
    return black, white
