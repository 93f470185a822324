"""
Pressure, distortion and the split Ruelle operator of a subsystem.

Partition sums are computed over the tile blocks of :mod:`tilepress.cells` with certified
brackets for the supremum and infimum of Birkhoff sums over each tile. The split Ruelle
operator acts on pairs of grid functions, one per face, and is assembled once as a sparse
matrix whose rows sum the inverse branches of each 1-tile.
"""
import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import logsumexp

from tilepress import appsettings
from tilepress.cells import build_tiles, level_counts
from tilepress.exceptions import ConvergenceError, InvariantViolation, PreconditionError
from tilepress.pillow import (
    SQRT2,
    Color,
    MapSpec,
    apply_map_array,
    measure_diameter,
    path_distance_array,
)
from tilepress.subsystem import classify, spectral_radius

logger = logging.getLogger(__name__)

__all__ = (
    "DistortionConstants",
    "BirkhoffBrackets",
    "PartitionSum",
    "PressureEstimate",
    "SplitFunction",
    "EigenPair",
    "TileMeasure",
    "GibbsReport",
    "DistortionReport",
    "measure_expansion_constant",
    "distortion_constants",
    "birkhoff_brackets",
    "partition_sum",
    "pressure_estimate",
    "transfer_operator",
    "split_apply",
    "split_apply_iterate",
    "eigen_pair",
    "tile_measures",
    "invariance_defect",
    "gibbs_constants",
    "theoretical_gibbs_constant",
    "distortion_check",
    "jacobian_defect",
)

HALF_DIAGONAL = SQRT2 / 2
# Largest tail sample array (tiles x grid nodes) materialized at once.
_TAIL_SAMPLE_LIMIT = 20_000_000


@dataclass(frozen=True)
class DistortionConstants:
    C0: float
    C1: float
    Cbar: float
    diam: float
    n_F: int
    kappa: float

    @property
    def log_distortion(self):
        """
        ``C1 * diam**kappa``, the distortion of Birkhoff sums over one tile.
        """
        return self.C1 * self.diam**self.kappa

    def as_dict(self):
        return {
            "C0": self.C0,
            "C1": self.C1,
            "Cbar": self.Cbar,
            "diam": self.diam,
            "n_F": self.n_F,
            "kappa": self.kappa,
        }


def measure_expansion_constant(spec, max_level=4, samples=256, seed=0):
    """
    Measure how far ``f^n`` is from scaling distances within an n-tile by exactly ``m**n``.

    :returns: ``max(measured, 1)``, the smallest admissible expansion constant.
    """
    rng = np.random.default_rng(seed)
    ratios = []
    for n in range(1, max_level + 1):
        scale = spec.m**n
        face = rng.integers(0, 2, samples)
        a = rng.integers(0, scale, samples)
        b = rng.integers(0, scale, samples)
        p = (face, (a + rng.random(samples)) / scale, (b + rng.random(samples)) / scale)
        q = (face, (a + rng.random(samples)) / scale, (b + rng.random(samples)) / scale)
        before = path_distance_array(*p, *q)
        for _ in range(n):
            p = apply_map_array(spec, *p)
            q = apply_map_array(spec, *q)
        after = path_distance_array(*p, *q)
        keep = before > 1e-12
        ratios.append(after[keep] / (scale * before[keep]))
    ratios = np.concatenate(ratios)
    measured = float(max(ratios.max(), 1.0 / ratios.min()))
    logger.debug("Measured expansion constant C0 = %.15f", measured)
    return max(measured, 1.0)


def distortion_constants(spec, pot, n_F, C0=None, diam=None):
    """
    Assemble the distortion constants of a potential.

    :param n_F: the irreducibility level of the subsystem (see :func:`classify`).
    :param C0: expansion constant, measured when omitted.
    :param diam: pillow diameter, measured when omitted.
    :rtype: DistortionConstants
    """
    if n_F is None:
        raise PreconditionError("The distortion constant Cbar needs a known n_F")
    C0 = measure_expansion_constant(spec) if C0 is None else float(C0)
    diam = measure_diameter() if diam is None else float(diam)
    kappa = pot.kappa
    C1 = C0 * pot.holder_seminorm / (1.0 - spec.expansion**-kappa)
    Cbar = spec.degree**n_F * math.exp(2 * n_F * pot.sup_norm + C1 * diam**kappa)
    return DistortionConstants(C0=C0, C1=C1, Cbar=Cbar, diam=diam, n_F=n_F, kappa=kappa)


def _oscillation(pot, m, first, last, spacing=HALF_DIAGONAL):
    # Hölder bound of sum_{j=first..last} |phi(x_j) - phi(y_j)| for points at most
    # spacing * m**-j apart.
    if last < first or pot.is_zero:
        return 0.0
    levels = np.arange(first, last + 1, dtype=float)
    return pot.holder_seminorm * float(np.sum((spacing * float(m) ** -levels) ** pot.kappa))


@dataclass
class BirkhoffBrackets:
    """
    Certified bounds of ``S_n phi`` over every n-tile, aligned with ``block``.
    """

    block: object
    center: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    plain_lower: np.ndarray
    plain_upper: np.ndarray
    depth: int

    @property
    def n(self):
        return self.block.n


def birkhoff_brackets(spec, sub, pot, n, depth=None, grid=None, keep_words=False, capacity=None):
    """
    Bracket the supremum and infimum of ``S_n phi`` over each n-tile.

    The plain bracket adds the Hölder oscillation of every level around the tile center.
    The refined bracket replaces the last ``depth`` levels by the sampled extremes of
    ``S_depth phi`` over the tail tile, widened by the sampling error.
    """
    depth = appsettings.TILEPRESS_REFINE_DEPTH if depth is None else depth
    grid = appsettings.TILEPRESS_REFINE_GRID if grid is None else grid
    depth = max(1, min(depth, n))
    m = spec.m
    while depth > 1:
        tail_tiles = sum(map(sum, level_counts(spec, sub, depth)))
        if tail_tiles * grid * grid <= _TAIL_SAMPLE_LIMIT:
            break
        depth -= 1
    block = build_tiles(
        spec, sub, n, pot=pot, keep_words=keep_words, tail_depth=depth, capacity=capacity
    )
    center = block.birkhoff
    plain = _oscillation(pot, m, 1, n)
    if pot.is_zero:
        return BirkhoffBrackets(block, center, center, center, center, center, depth)

    nodes = np.linspace(0.0, 1.0, grid)
    gu, gv = np.meshgrid(nodes, nodes, indexing="ij")
    tails = build_tiles(spec, sub, depth, pot=pot, samples=(gu.ravel(), gv.ravel()))
    tail_centers = build_tiles(spec, sub, depth, pot=pot).birkhoff
    sampling = _oscillation(pot, m, 1, depth, spacing=HALF_DIAGONAL / (grid - 1))
    rise = np.maximum(tails.birkhoff.max(axis=1) - tail_centers, 0.0) + sampling
    fall = np.minimum(tails.birkhoff.min(axis=1) - tail_centers, 0.0) - sampling
    head = _oscillation(pot, m, depth + 1, n)
    upper = np.minimum(center + head + rise[block.tail], center + plain)
    lower = np.maximum(center - head + fall[block.tail], center - plain)
    logger.debug(
        "Brackets at level %d: depth %d, mean width %.3g (plain %.3g)",
        n,
        depth,
        float(np.mean(upper - lower)),
        2 * plain,
    )
    return BirkhoffBrackets(block, center, lower, upper, center - plain, center + plain, depth)


def _grouped_logsumexp(values, block):
    out = np.full((2, 2), -np.inf)
    for position in Color:
        for color in Color:
            mask = (block.position == position) & (block.color == color)
            if mask.any():
                out[position, color] = logsumexp(values[mask])
    return out


def log_spectral_radius(log_matrix):
    """
    ``log ρ(M)`` for a nonnegative 2x2 matrix given by the logarithms of its entries.
    """
    finite = np.isfinite(log_matrix)
    if not finite.any():
        return -math.inf
    shift = log_matrix[finite].max()
    rho = spectral_radius(np.exp(log_matrix - shift).tolist())
    return shift + math.log(rho) if rho > 0 else -math.inf


@dataclass
class PartitionSum:
    n: int
    log_center: float
    log_upper: float
    log_lower: float
    log_plain_upper: float
    log_plain_lower: float
    log_matrix_center: np.ndarray
    log_matrix_upper: np.ndarray
    log_matrix_lower: np.ndarray

    @property
    def center(self):
        return math.exp(self.log_center)

    @property
    def upper(self):
        return math.exp(self.log_upper)

    @property
    def lower(self):
        return math.exp(self.log_lower)

    @property
    def plain_upper(self):
        return math.exp(self.log_plain_upper)


def partition_sum(spec, sub, pot, n, brackets=None, capacity=None):
    """
    Partition sum ``Z_n = sum over n-tiles of exp(sup S_n phi)``.

    :returns: the center-value sum together with certified upper and lower sums,
        also split by (position, color).
    :rtype: PartitionSum
    """
    if brackets is None:
        brackets = birkhoff_brackets(spec, sub, pot, n, capacity=capacity)
    block = brackets.block
    result = PartitionSum(
        n=n,
        log_center=float(logsumexp(brackets.center)),
        log_upper=float(logsumexp(brackets.upper)),
        log_lower=float(logsumexp(brackets.lower)),
        log_plain_upper=float(logsumexp(brackets.plain_upper)),
        log_plain_lower=float(logsumexp(brackets.plain_lower)),
        log_matrix_center=_grouped_logsumexp(brackets.center, block),
        log_matrix_upper=_grouped_logsumexp(brackets.upper, block),
        log_matrix_lower=_grouped_logsumexp(brackets.lower, block),
    )
    logger.info(
        "Z_%d: log center %.12f, certified [%.12f, %.12f]",
        n,
        result.log_center,
        result.log_lower,
        result.log_upper,
    )
    return result


@dataclass
class PressureEstimate:
    rows: list
    fekete_upper: float
    lower: float
    upper: float
    extrapolated: float

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value, slack=1e-12):
        return self.lower - slack <= value <= self.upper + slack

    def as_dict(self):
        return {
            "rows": self.rows,
            "fekete_upper": self.fekete_upper,
            "P_bracket": [self.lower, self.upper],
            "extrapolated": self.extrapolated,
        }


def pressure_estimate(spec, sub, pot, n_max, capacity=None):
    """
    Bracket the topological pressure from partition sums up to level ``n_max``.

    Upper bounds: ``(1/n) log`` of the certified sums (subadditivity) and of the spectral
    radius of the certified (position, color) sums. Lower bound: the spectral radius of
    the certified lower sums, which concatenate into lower sums of every multiple level.
    """
    if n_max < 1:
        raise PreconditionError("n_max should be at least 1, got {0}".format(n_max))
    rows = []
    for n in range(1, n_max + 1):
        z = partition_sum(spec, sub, pot, n, capacity=capacity)
        rows.append(
            {
                "n": n,
                "center": z.log_center / n,
                "certified_upper": z.log_upper / n,
                "certified_lower": z.log_lower / n,
                "spectral_upper": log_spectral_radius(z.log_matrix_upper) / n,
                "spectral_lower": log_spectral_radius(z.log_matrix_lower) / n,
                "spectral_center": log_spectral_radius(z.log_matrix_center) / n,
            }
        )
    fekete = min(row["certified_upper"] for row in rows)
    estimate = PressureEstimate(
        rows=rows,
        fekete_upper=fekete,
        lower=max(row["spectral_lower"] for row in rows),
        upper=min(fekete, min(row["spectral_upper"] for row in rows)),
        extrapolated=rows[-1]["spectral_center"],
    )
    logger.info(
        "Pressure bracket [%.12f, %.12f] at n_max=%d", estimate.lower, estimate.upper, n_max
    )
    return estimate


def _bilinear(G, t):
    s = np.asarray(t, dtype=float) * (G - 1)
    lower = np.clip(np.floor(s).astype(np.int64), 0, G - 2)
    return lower, s - lower


@dataclass
class SplitFunction:
    """
    A function on the split sphere, sampled on a ``G x G`` grid on each face.
    ``values[face, i, j]`` is the value at ``(i / (G-1), j / (G-1))``.
    """

    values: np.ndarray

    @property
    def G(self):
        return self.values.shape[1]

    @classmethod
    def constant(cls, G, value=1.0):
        return cls(np.full((2, G, G), float(value)))

    @classmethod
    def from_function(cls, G, func):
        nodes = np.linspace(0.0, 1.0, G)
        x, y = np.meshgrid(nodes, nodes, indexing="ij")
        return cls(np.stack([func(face, x, y) for face in (0, 1)]).astype(float))

    def flat(self):
        return self.values.ravel()

    def interpolate(self, face, x, y):
        """
        Bilinear interpolation on the face grids (with broadcasting).
        """
        G = self.G
        i, fx = _bilinear(G, x)
        j, fy = _bilinear(G, y)
        face = np.asarray(face, dtype=np.int64)
        v = self.values
        return (
            (1 - fx) * (1 - fy) * v[face, i, j]
            + fx * (1 - fy) * v[face, i + 1, j]
            + (1 - fx) * fy * v[face, i, j + 1]
            + fx * fy * v[face, i + 1, j + 1]
        )


def _boundary_average(G):
    size = G * G
    nodes = np.arange(size)
    i, j = np.divmod(nodes, G)
    boundary = (i == 0) | (i == G - 1) | (j == 0) | (j == G - 1)
    inner = nodes[~boundary]
    edge = nodes[boundary]
    rows = [inner, inner + size, edge, edge, edge + size, edge + size]
    cols = [inner, inner + size, edge, edge + size, edge, edge + size]
    data = [np.ones(len(inner))] * 2 + [np.full(len(edge), 0.5)] * 4
    return sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * size, 2 * size),
    )


@functools.lru_cache(maxsize=4)
def transfer_operator(spec, sub, pot, G):
    """
    The one-step split Ruelle operator on ``G x G`` face grids, as a sparse matrix.

    Row ``face * G**2 + i * G + j`` sums, over the 1-tiles of color ``face``, the
    interpolated value at the inverse branch of the node times ``exp(phi)`` there.
    Boundary nodes of the full map are glued by averaging the two faces.
    """
    if G < 2:
        raise PreconditionError("Grid resolution should be at least 2, got {0}".format(G))
    m = spec.m
    size = G * G
    nodes = np.linspace(0.0, 1.0, G)
    gx, gy = np.meshgrid(nodes, nodes, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    target = np.arange(size)
    rows, cols, data = [], [], []
    for label in sub.sorted_labels():
        bx = (label.i + (gx if label.i % 2 == 0 else 1.0 - gx)) / m
        by = (label.j + (gy if label.j % 2 == 0 else 1.0 - gy)) / m
        weight = np.exp(pot.evaluate(int(label.home_face), bx, by))
        i, fx = _bilinear(G, bx)
        j, fy = _bilinear(G, by)
        row = int(label.color) * size + target
        base = int(label.home_face) * size
        for di, wx in ((0, 1.0 - fx), (1, fx)):
            for dj, wy in ((0, 1.0 - fy), (1, fy)):
                rows.append(row)
                cols.append(base + (i + di) * G + (j + dj))
                data.append(weight * wx * wy)
    operator = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * size, 2 * size),
    )
    if sub.is_full(spec):
        operator = (_boundary_average(G) @ operator).tocsr()
    logger.debug("Split operator on %dx%d grids: %d nonzeros", G, G, operator.nnz)
    return operator


def split_apply(spec, sub, pot, u):
    """
    Apply the split Ruelle operator once.

    :rtype: SplitFunction
    """
    operator = transfer_operator(spec, sub, pot, u.G)
    return SplitFunction((operator @ u.flat()).reshape(u.values.shape))


def _forward_birkhoff(spec, pot, face, x, y, n):
    total = np.zeros(np.broadcast(face, x, y).shape)
    for _ in range(n):
        total = total + pot.evaluate(face, x, y)
        face, x, y = apply_map_array(spec, face, x, y)
    return total


def split_apply_iterate(spec, sub, pot, u, n, batch=64):
    """
    The n-step operator evaluated directly from the n-tile branches, without intermediate
    interpolation.
    """
    G = u.G
    block = build_tiles(spec, sub, n)
    nodes = np.linspace(0.0, 1.0, G)
    gx, gy = np.meshgrid(nodes, nodes, indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    out = np.zeros((2, G * G))
    for color in Color:
        tiles = np.flatnonzero(block.color == color)
        for start in range(0, len(tiles), batch):
            chunk = tiles[start : start + batch]
            scale = float(block.scale)
            zx = (block.sx[chunk, None] * gx[None, :] + block.ox[chunk, None]) / scale
            zy = (block.sy[chunk, None] * gy[None, :] + block.oy[chunk, None]) / scale
            face = block.position[chunk, None].astype(np.int64)
            weight = np.exp(_forward_birkhoff(spec, pot, face, zx, zy, n))
            out[color] += (u.interpolate(face, zx, zy) * weight).sum(axis=0)
    return SplitFunction(out.reshape(2, G, G))


@dataclass
class EigenPair:
    lam: float
    log_lambda: float
    u_tilde: SplitFunction
    residual: float
    iterations: int
    cesaro_steps: int
    dual: np.ndarray
    face_mass: tuple
    residual_history: list = field(default_factory=list, repr=False)

    @property
    def bounds(self):
        return float(self.u_tilde.values.min()), float(self.u_tilde.values.max())

    def within(self, Cbar):
        low, high = self.bounds
        return 1.0 / Cbar <= low and high <= Cbar

    def as_dict(self):
        low, high = self.bounds
        return {
            "lambda": self.lam,
            "log_lambda": self.log_lambda,
            "residual": self.residual,
            "iterations": self.iterations,
            "cesaro_steps": self.cesaro_steps,
            "face_mass": list(self.face_mass),
            "u_min": low,
            "u_max": high,
        }


def _power_iteration(operator, tol, max_iter):
    v = np.ones(operator.shape[0])
    history = []
    average = np.zeros_like(v)
    for step in range(1, max_iter + 1):
        w = operator @ v
        lam = w.max()
        if not lam > 0:
            raise ConvergenceError("The split operator annihilated the iterate", history)
        w /= lam
        residual = float(np.abs(w - v).max())
        history.append(residual)
        v = w
        if residual <= tol:
            return v, lam, history, step, 0
        # Periodic subsystems oscillate; their Cesàro averages still converge.
        average += v
        if step % 50 == 0:
            mean = average / average.max()
            image = operator @ mean
            lam_mean = image.max()
            if np.abs(image / lam_mean - mean).max() <= tol:
                return mean, lam_mean, history, step, step
        if step % 100 == 0:
            logger.debug("Power iteration step %d: residual %.3g", step, residual)
    raise ConvergenceError(
        "Power iteration did not reach {0} in {1} steps (last residual {2:.3g})".format(
            tol, max_iter, history[-1]
        ),
        history,
    )


def _dual_iteration(adjoint, lam, tol, max_iter):
    # Damped iteration (I + L*/λ)/2, which has the same fixed point.
    mass = np.full(adjoint.shape[0], 1.0 / adjoint.shape[0])
    history = []
    for _ in range(max_iter):
        pushed = 0.5 * (mass + (adjoint @ mass) / lam)
        pushed /= pushed.sum()
        change = float(np.abs(pushed - mass).sum())
        history.append(change)
        mass = pushed
        if change <= tol:
            return mass
    raise ConvergenceError(
        "Dual iteration did not reach {0} in {1} steps".format(tol, max_iter), history
    )


def eigen_pair(spec, sub, pot, G=None, tol=None, max_iter=None, classification=None):
    """
    Leading eigenvalue and eigenfunction of the split Ruelle operator, and its dual
    eigenmeasure on the grid nodes.

    The eigenfunction is normalized so that it integrates to 1 against the dual measure.

    :raises PreconditionError: when the subsystem is not known to be strongly irreducible.
    :raises ConvergenceError: when the iteration budget runs out.
    :rtype: EigenPair
    """
    G = appsettings.TILEPRESS_GRID_SIZE if G is None else G
    tol = appsettings.TILEPRESS_TOL if tol is None else tol
    max_iter = appsettings.TILEPRESS_MAX_ITER if max_iter is None else max_iter
    if classification is None:
        classification = classify(spec, sub)
    if not classification.strongly_irreducible:
        raise PreconditionError(
            "Subsystem {0} is not known to be strongly irreducible ({1}); the split "
            "operator eigenpair is only defined for strongly irreducible subsystems".format(
                sub.name, classification.note
            )
        )
    operator = transfer_operator(spec, sub, pot, G)
    v, lam, history, iterations, cesaro = _power_iteration(operator, tol, max_iter)
    dual = _dual_iteration(operator.T.tocsr(), lam, tol, max_iter)
    u = v / float(dual @ v)
    residual = float(np.abs(operator @ u / lam - u).max())
    size = G * G
    face_mass = (float(dual[:size].sum()), float(dual[size:].sum()))
    pair = EigenPair(
        lam=float(lam),
        log_lambda=math.log(lam),
        u_tilde=SplitFunction(u.reshape(2, G, G)),
        residual=residual,
        iterations=iterations,
        cesaro_steps=cesaro,
        dual=dual,
        face_mass=face_mass,
        residual_history=history,
    )
    logger.info(
        "Eigenpair of %s on %dx%d grids: log lambda %.12f, residual %.3g after %d steps",
        sub.name,
        G,
        G,
        pair.log_lambda,
        residual,
        iterations,
    )
    return pair


@dataclass
class TileMeasure:
    """
    Weights of the n-tiles of a subsystem, aligned with ``block``.
    """

    n: int
    kind: str
    weights: np.ndarray
    block: object

    @property
    def total(self):
        return float(self.weights.sum())

    def items(self):
        for index, weight in enumerate(self.weights):
            yield self.block.address(index), float(weight)

    def integrate(self, values):
        return float(np.dot(self.weights, values))


def _normalized(log_weights, what):
    total = logsumexp(log_weights)
    if not np.isfinite(total):
        raise InvariantViolation("Degenerate normalizer for the {0} weights".format(what))
    return np.exp(log_weights - total)


def _log_eigen_weights(block, n, eig):
    log_mass = np.log(np.asarray(eig.face_mass))
    return block.birkhoff - n * eig.log_lambda + log_mass[block.color]


def tile_measures(spec, sub, pot, n, eig, keep_words=False, capacity=None):
    """
    Eigenmeasure and equilibrium-measure weights of the n-tiles.

    ``m(X) ~ lambda**-n exp(S_n phi(x_X)) nu(face of the color of X)`` and
    ``mu(X) ~ u(x_X) m(X)``, both normalized.

    :returns: ``(m, mu)``
    """
    block = build_tiles(spec, sub, n, pot=pot, keep_words=keep_words, capacity=capacity)
    log_m = _log_eigen_weights(block, n, eig)
    m_weights = _normalized(log_m, "eigenmeasure")
    cx, cy = block.centers()
    density = eig.u_tilde.interpolate(block.position, cx, cy)
    if (density <= 0).any():
        raise InvariantViolation("The eigenfunction is not positive at every tile center")
    mu_weights = _normalized(np.log(m_weights) + np.log(density), "equilibrium")
    return (
        TileMeasure(n=n, kind="eigenmeasure", weights=m_weights, block=block),
        TileMeasure(n=n, kind="equilibrium", weights=mu_weights, block=block),
    )


def invariance_defect(spec, measure, g):
    """
    ``|∫ g∘f dμ - ∫ g dμ|`` at tile resolution, for a potential-like ``g``.
    """
    block = measure.block
    cx, cy = block.centers()
    image = apply_map_array(spec, block.position, cx, cy)
    before = measure.integrate(g.evaluate(block.position, cx, cy))
    after = measure.integrate(g.evaluate(*image))
    return abs(after - before)


@dataclass
class GibbsReport:
    C_observed: float
    C_raw: float
    worst_tile: int
    ratio_min: float
    ratio_max: float
    level: int

    def as_dict(self):
        return {
            "C_observed": self.C_observed,
            "C_raw": self.C_raw,
            "worst_tile": self.worst_tile,
            "ratio_min": self.ratio_min,
            "ratio_max": self.ratio_max,
            "level": self.level,
        }


GIBBS_SAMPLES = ((0.5, 0.5), (0.25, 0.25), (0.25, 0.75), (0.75, 0.25), (0.75, 0.75))


def gibbs_constants(measure, pot, P, samples=GIBBS_SAMPLES):
    """
    Observed Gibbs constants of a tile measure.

    The ratio ``mu(X) / exp(S_n phi(x) - n P)`` is taken at sample points of every tile.
    ``C_observed`` is ``sqrt(max / min)``, the constant after the best rescaling of
    ``exp(-nP)``; ``C_raw`` is the constant without rescaling.

    :rtype: GibbsReport
    """
    if (measure.weights <= 0).any():
        raise InvariantViolation("A tile of the subsystem has zero weight")
    block = measure.block
    n = measure.n
    spec = MapSpec(block.m)
    scale = float(block.scale)
    log_weight = np.log(measure.weights)
    low = np.full(len(block), np.inf)
    high = np.full(len(block), -np.inf)
    a, b = block.a, block.b
    for s, t in samples:
        x, y = (a + s) / scale, (b + t) / scale
        log_ratio = log_weight - (_forward_birkhoff(spec, pot, block.position, x, y, n) - n * P)
        low = np.minimum(low, log_ratio)
        high = np.maximum(high, log_ratio)
    low_min, high_max = float(low.min()), float(high.max())
    report = GibbsReport(
        C_observed=math.exp((high_max - low_min) / 2),
        C_raw=math.exp(max(high_max, -low_min)),
        worst_tile=int(np.argmax(np.maximum(high, -low))),
        ratio_min=math.exp(low_min),
        ratio_max=math.exp(high_max),
        level=n,
    )
    logger.info(
        "Gibbs constants at level %d: observed %.6g, raw %.6g", n, report.C_observed, report.C_raw
    )
    return report


def theoretical_gibbs_constant(constants, eig):
    """
    ``Cbar exp(C1 diam**kappa) / min_c m(X0_c)``.
    """
    return constants.Cbar * math.exp(constants.log_distortion) / min(eig.face_mass)


@dataclass
class DistortionReport:
    level: int
    same_color_pairs: int
    same_color_violations: int
    same_color_worst_excess: float
    cross_color_pairs: int
    cross_color_violations: int
    cross_color_worst_log_ratio: float

    @property
    def ok(self):
        return not (self.same_color_violations or self.cross_color_violations)


def branch_log_sums(spec, block, pot, color, x, y, batch=64):
    """
    ``log sum over n-tiles X of the given color of exp(S_n phi(branch_X(x, y)))``.
    """
    tiles = np.flatnonzero(block.color == int(color))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not len(tiles):
        return np.full(len(x), -np.inf)
    scale = float(block.scale)
    face = block.position[tiles, None].astype(np.int64)
    out = np.empty(len(x))
    for start in range(0, len(x), batch):
        xs, ys = x[start : start + batch], y[start : start + batch]
        zx = (block.sx[tiles, None] * xs[None, :] + block.ox[tiles, None]) / scale
        zy = (block.sy[tiles, None] * ys[None, :] + block.oy[tiles, None]) / scale
        out[start : start + batch] = logsumexp(
            _forward_birkhoff(spec, pot, face, zx, zy, block.n), axis=0
        )
    return out


def distortion_check(spec, sub, pot, n, constants, pairs=1000, seed=0):
    """
    Sample the distortion laws of the partial operators.

    Same color: ``|log B(x) - log B(y)| <= C1 d(x, y)**kappa``.
    Two colors: ``|log B(x) - log B(y)| <= log Cbar``.

    :rtype: DistortionReport
    """
    rng = np.random.default_rng(seed)
    block = build_tiles(spec, sub, n)
    colors = rng.integers(0, 2, pairs)
    x1, y1, x2, y2 = (rng.random(pairs) for _ in range(4))
    at_first = np.empty(pairs)
    at_second = np.empty(pairs)
    at_second_other = np.empty(pairs)
    for color in Color:
        mask = colors == color
        at_first[mask] = branch_log_sums(spec, block, pot, color, x1[mask], y1[mask])
        at_second[mask] = branch_log_sums(spec, block, pot, color, x2[mask], y2[mask])
        at_second_other[mask] = branch_log_sums(
            spec, block, pot, color.opposite, x2[mask], y2[mask]
        )
    distance = np.hypot(x1 - x2, y1 - y2)
    finite = np.isfinite(at_first) & np.isfinite(at_second)
    excess = np.abs(at_first - at_second)[finite] - constants.C1 * distance[finite] ** pot.kappa
    both = np.isfinite(at_first) & np.isfinite(at_second_other)
    cross_ratio = np.abs(at_first - at_second_other)[both]
    slack = 1e-9
    report = DistortionReport(
        level=n,
        same_color_pairs=int(finite.sum()),
        same_color_violations=int((excess > slack).sum()),
        same_color_worst_excess=float(excess.max()) if len(excess) else -math.inf,
        cross_color_pairs=int(both.sum()),
        cross_color_violations=int((cross_ratio > math.log(constants.Cbar) + slack).sum()),
        cross_color_worst_log_ratio=float(cross_ratio.max()) if len(cross_ratio) else 0.0,
    )
    if not report.ok:
        logger.warning("Distortion violations at level %d: %s", n, report)
    return report


def jacobian_defect(spec, sub, pot, n, eig, capacity=None):
    """
    Largest deviation of ``log m(F(X)) - log m(X)`` from ``log lambda - phi(x_X)`` over
    the (n+1)-tiles; the theory bounds it by ``2 C1 diam**kappa``.
    """
    fine = build_tiles(spec, sub, n + 1, pot=pot, tail_depth=n, capacity=capacity)
    coarse = build_tiles(spec, sub, n, pot=pot, capacity=capacity)
    log_fine = np.log(_normalized(_log_eigen_weights(fine, n + 1, eig), "eigenmeasure"))
    log_coarse = np.log(_normalized(_log_eigen_weights(coarse, n, eig), "eigenmeasure"))
    phi = fine.birkhoff - coarse.birkhoff[fine.tail]
    observed = log_coarse[fine.tail] - log_fine
    return float(np.abs(observed - (eig.log_lambda - phi)).max())
