"""
Large deviations of Birkhoff averages.

The pressure curve ``p(t) = P(f, t phi)`` is sampled with the split operator and
interpolated by a cubic spline; the rate function follows from its derivative. The
deviation sets are unions of n-pairs, pairs of a black and a white n-tile sharing the
n-edge that ``f^n`` maps onto a chosen 0-edge.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from tilepress import appsettings
from tilepress.cells import pair_table
from tilepress.exceptions import ConvexityGateError, PreconditionError, RangeError
from tilepress.pillow import iterate_spec
from tilepress.subsystem import Subsystem, classify, classify_cells
from tilepress.thermo import (
    birkhoff_brackets,
    distortion_constants,
    eigen_pair,
    gibbs_constants,
    pressure_estimate,
    tile_measures,
)

logger = logging.getLogger(__name__)

__all__ = (
    "PressureCurve",
    "EnergyRange",
    "RateRow",
    "RateTable",
    "PairSet",
    "DeviationRow",
    "DeviationReport",
    "default_t_grid",
    "pressure_curve",
    "energy_range",
    "rate_function",
    "pairs_alpha",
    "measure_energy",
    "deviation_report",
)

CONVEXITY_GATE = 1e-6
LEGENDRE_POINTS = 8001


def default_t_grid():
    return np.linspace(-4.0, 4.0, 41)


def _run_ordered(func, items, threads):
    # Results come back in submission order, whatever the thread count.
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(func, items))


@dataclass
class PressureCurve:
    t_grid: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    ddp: np.ndarray
    source: str
    spline: CubicSpline = field(repr=False)

    @classmethod
    def from_values(cls, t_grid, p, source):
        """
        Interpolate sampled pressures and apply the strict convexity gate.

        :raises ConvexityGateError: when the curve is flat, which happens when the
            potential is co-homologous to a constant.
        """
        t_grid = np.asarray(t_grid, dtype=float)
        p = np.asarray(p, dtype=float)
        spline = CubicSpline(t_grid, p)
        curve = cls(t_grid, p, spline(t_grid, 1), spline(t_grid, 2), source, spline)
        if curve.ddp.max() <= CONVEXITY_GATE:
            raise ConvexityGateError(
                "The pressure curve is flat (max p'' = {0:.3g}): the potential looks "
                "co-homologous to a constant".format(float(curve.ddp.max()))
            )
        return curve

    def value(self, t):
        return float(self.spline(t))

    def derivative(self, t):
        return float(self.spline(t, 1))

    def rows(self):
        return [
            {"t": float(t), "p": float(p), "dp": float(dp), "ddp": float(ddp)}
            for t, p, dp, ddp in zip(self.t_grid, self.p, self.dp, self.ddp)
        ]


def _check_grid(t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 4:
        raise PreconditionError("The t grid needs at least 4 points")
    if (np.diff(t_grid) <= 0).any():
        raise PreconditionError("The t grid should be strictly increasing")
    if np.abs(t_grid).max() > appsettings.TILEPRESS_T_MAX:
        raise PreconditionError(
            "The t grid exceeds |t| <= {0}".format(appsettings.TILEPRESS_T_MAX)
        )
    return t_grid


def pressure_curve(
    spec,
    pot,
    t_grid=None,
    method="eigen",
    sub=None,
    G=None,
    n_max=4,
    threads=None,
    tol=None,
    max_iter=None,
):
    """
    Sample ``p(t) = P(f, t phi)`` on a grid.

    :param method: ``"eigen"`` for the split-operator eigenvalue, ``"zn_bracket"`` for
        the midpoint of the certified partition-sum bracket at level ``n_max``.
    :param threads: worker threads for the independent solves.
    :param tol: residual tolerance handed to each eigen solve.
    :param max_iter: iteration budget handed to each eigen solve.
    :rtype: PressureCurve
    """
    t_grid = _check_grid(default_t_grid() if t_grid is None else t_grid)
    sub = Subsystem.full(spec) if sub is None else sub
    threads = appsettings.get_thread_count(threads)
    if method == "eigen":
        classification = classify(spec, sub)

        def solve(t):
            return eigen_pair(
                spec,
                sub,
                pot.scaled(t),
                G=G,
                tol=tol,
                max_iter=max_iter,
                classification=classification,
            )

        values = [pair.log_lambda for pair in _run_ordered(solve, list(t_grid), threads)]
    elif method == "zn_bracket":

        def solve(t):
            estimate = pressure_estimate(spec, sub, pot.scaled(t), n_max)
            return (estimate.lower + estimate.upper) / 2

        values = _run_ordered(solve, list(t_grid), threads)
    else:
        raise PreconditionError("Unknown pressure curve method {0!r}".format(method))
    logger.info("Pressure curve over %d points (%s)", len(t_grid), method)
    return PressureCurve.from_values(t_grid, values, method)


@dataclass(frozen=True)
class EnergyRange:
    gamma_phi: float
    alpha_min_hat: float
    alpha_max_hat: float

    def as_dict(self):
        return {
            "gamma_phi": self.gamma_phi,
            "alpha_min_hat": self.alpha_min_hat,
            "alpha_max_hat": self.alpha_max_hat,
        }


def energy_range(curve):
    """
    ``gamma_phi = p'(1)`` and the estimated energy range ``(p'(-T), p'(T))``.
    """
    if not (curve.t_grid[0] < 1.0 < curve.t_grid[-1]):
        raise PreconditionError("The t grid should contain 1 in its interior")
    result = EnergyRange(
        gamma_phi=curve.derivative(1.0),
        alpha_min_hat=float(curve.dp[0]),
        alpha_max_hat=float(curve.dp[-1]),
    )
    if not (result.alpha_min_hat < result.gamma_phi < result.alpha_max_hat):
        raise ConvexityGateError(
            "gamma_phi = {0:.6g} is not inside ({1:.6g}, {2:.6g})".format(
                result.gamma_phi, result.alpha_min_hat, result.alpha_max_hat
            )
        )
    return result


@dataclass(frozen=True)
class RateRow:
    alpha: float
    xi: float
    rate: float
    legendre: float

    @property
    def derivative(self):
        """
        ``I'(alpha) = xi(alpha) - 1``.
        """
        return self.xi - 1.0


@dataclass
class RateTable:
    gamma_phi: float
    alpha_min_hat: float
    alpha_max_hat: float
    rows: list
    curve: PressureCurve = field(repr=False)

    @property
    def legendre_residuals(self):
        return [abs(row.rate - row.legendre) for row in self.rows]

    def row_for(self, alpha):
        for row in self.rows:
            if abs(row.alpha - alpha) <= 1e-12:
                return row
        return _rate_row(self.curve, alpha, self.alpha_min_hat, self.alpha_max_hat)

    def as_dict(self):
        return {
            "gamma_phi": self.gamma_phi,
            "alpha_min_hat": self.alpha_min_hat,
            "alpha_max_hat": self.alpha_max_hat,
            "rows": [
                {"alpha": r.alpha, "xi": r.xi, "I": r.rate, "I_legendre": r.legendre}
                for r in self.rows
            ],
        }


def _rate_row(curve, alpha, low, high):
    if not (low < alpha < high):
        raise RangeError(
            "alpha = {0:.6g} is outside the estimated energy range ({1:.6g}, {2:.6g})".format(
                alpha, low, high
            )
        )
    t0, t1 = float(curve.t_grid[0]), float(curve.t_grid[-1])
    xi = brentq(lambda t: curve.derivative(t) - alpha, t0, t1, xtol=1e-14, rtol=1e-14)
    rate = curve.value(1.0) - curve.value(xi) + (xi - 1.0) * alpha
    fine = np.linspace(t0, t1, LEGENDRE_POINTS)
    legendre = curve.value(1.0) - alpha + float(np.max(fine * alpha - curve.spline(fine)))
    return RateRow(alpha=float(alpha), xi=float(xi), rate=float(rate), legendre=legendre)


def rate_function(curve, alphas):
    """
    Rate function ``I(alpha) = p(1) - p(xi) + (xi - 1) alpha`` with ``p'(xi) = alpha``,
    cross-checked against its Legendre form.

    :raises RangeError: for an ``alpha`` outside the estimated energy range.
    :rtype: RateTable
    """
    energy = energy_range(curve)
    rows = [
        _rate_row(curve, alpha, energy.alpha_min_hat, energy.alpha_max_hat)
        for alpha in sorted(float(a) for a in alphas)
    ]
    return RateTable(
        gamma_phi=energy.gamma_phi,
        alpha_min_hat=energy.alpha_min_hat,
        alpha_max_hat=energy.alpha_max_hat,
        rows=rows,
        curve=curve,
    )


@dataclass
class PairSet:
    """
    The n-pairs selected at level ``alpha``, as index arrays into ``block``.

    ``selected`` holds every pair whose certified bracket allows a point with Birkhoff
    average beyond ``alpha`` (ambiguous pairs included); ``certain`` those for which the
    bracket guarantees it.
    """

    e0: object
    n: int
    alpha: float
    gamma: float
    black: np.ndarray
    white: np.ndarray
    selected: np.ndarray
    certain: np.ndarray
    block: object = field(repr=False)
    strongly_primitive: bool = None
    classification: object = field(default=None, repr=False)

    @property
    def selected_count(self):
        return int(self.selected.sum())

    @property
    def certain_count(self):
        return int(self.certain.sum())

    def pairs(self):
        for black, white in zip(self.black[self.selected], self.white[self.selected]):
            yield self.block.address(black), self.block.address(white)

    def tiles(self):
        return np.concatenate([self.black[self.selected], self.white[self.selected]])

    def covers_sphere(self):
        """
        Each pair is one black and one white tile, so ``f^n`` maps it onto both faces.
        """
        return bool((self.block.color[self.black] == 1).all()) and bool(
            (self.block.color[self.white] == 0).all()
        )


def pairs_alpha(
    spec, pot, e0, n, alpha, gamma, brackets=None, classify_cap=3, keep_words=False
):
    """
    Select the n-pairs that contain a point with ``S_n phi / n`` beyond ``alpha``,
    on the side of ``alpha`` away from ``gamma``.

    The strong primitivity of ``f^n`` restricted to the selected pairs is decided on the
    iterate map, where the n-tiles are 1-tiles.

    :rtype: PairSet
    """
    if alpha == gamma:
        raise PreconditionError("alpha should differ from gamma")
    if brackets is None:
        brackets = birkhoff_brackets(spec, Subsystem.full(spec), pot, n, keep_words=keep_words)
    block = brackets.block
    black, white = pair_table(block, e0)
    lower, upper = brackets.lower / n, brackets.upper / n
    if alpha > gamma:
        selected = np.maximum(upper[black], upper[white]) >= alpha
        certain = np.maximum(lower[black], lower[white]) >= alpha
    else:
        selected = np.minimum(lower[black], lower[white]) <= alpha
        certain = np.minimum(upper[black], upper[white]) <= alpha
    result = PairSet(
        e0=e0,
        n=n,
        alpha=float(alpha),
        gamma=float(gamma),
        black=black,
        white=white,
        selected=selected,
        certain=certain,
        block=block,
    )
    if result.selected_count:
        tiles = result.tiles()
        result.classification = classify_cells(
            iterate_spec(spec, n),
            block.position[tiles],
            block.a[tiles],
            block.b[tiles],
            n_cap=classify_cap,
            name="P^{0}({1:.4g})".format(n, alpha),
        )
        result.strongly_primitive = result.classification.strongly_primitive
    else:
        result.strongly_primitive = False
    logger.info(
        "Level %d, alpha %.6g: %d pairs selected (%d certain) of %d",
        n,
        alpha,
        result.selected_count,
        result.certain_count,
        len(black),
    )
    return result


def measure_energy(measure, pot):
    """
    ``∫ phi dmu`` at tile resolution, sampled at the tile centers.
    """
    cx, cy = measure.block.centers()
    return measure.integrate(pot.evaluate(measure.block.position, cx, cy))


@dataclass
class DeviationRow:
    n: int
    mu_pairs: float
    mu_threshold: float
    mu_crossing: float
    selected_pairs: int
    certain_pairs: int
    gibbs_raw: float
    strongly_primitive: bool
    bound: float = None
    holds: bool = None

    @property
    def slope(self):
        if self.mu_pairs <= 0:
            return math.inf
        return -math.log(self.mu_pairs) / self.n

    def as_dict(self):
        return {
            "n": self.n,
            "mu_pairs": self.mu_pairs,
            "mu_threshold": self.mu_threshold,
            "mu_crossing": self.mu_crossing,
            "selected_pairs": self.selected_pairs,
            "certain_pairs": self.certain_pairs,
            "gibbs_raw": self.gibbs_raw,
            "strongly_primitive": self.strongly_primitive,
            "bound": self.bound,
            "holds": self.holds,
            "slope": self.slope,
        }


@dataclass
class DeviationReport:
    alpha: float
    gamma: float
    rate: float
    xi: float
    rows: list
    C_alpha: float
    C_mu: float
    C1: float
    diam: float
    first_valid_N: int = None
    N_formula: int = None

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "gamma": self.gamma,
            "I_alpha": self.rate,
            "xi_alpha": self.xi,
            "rows": [row.as_dict() for row in self.rows],
            "first_valid_N": self.first_valid_N,
            "N_formula": self.N_formula,
            "C_alpha_components": {
                "C_alpha": self.C_alpha,
                "C_mu": self.C_mu,
                "C1": self.C1,
                "diam": self.diam,
                "I_prime": self.xi - 1.0,
            },
        }


def deviation_report(
    spec, pot, e0, alpha, n_range, rate, eig=None, constants=None, threads=None, capacity=None
):
    """
    Compare the equilibrium mass of the deviation sets with ``C_alpha exp(-I(alpha) n)``.

    ``C_alpha = 2 C_mu exp(C1 diam**kappa (|2 I'(alpha)| + 1))`` with ``C_mu`` the largest
    observed raw Gibbs constant over ``n_range``.

    ``N_formula`` is a surrogate threshold ``ceil(2 C1 diam**kappa / |alpha - gamma|)``: the
    level past which the distortion term is at most half the energy gap. It is not the
    sharp level from the large deviation estimate, and ``first_valid_N`` is the observed one.

    :rtype: DeviationReport
    """
    row = rate.row_for(alpha)
    gamma = rate.gamma_phi
    full = Subsystem.full(spec)
    classification = classify(spec, full)
    if eig is None:
        eig = eigen_pair(spec, full, pot, classification=classification)
    if constants is None:
        constants = distortion_constants(spec, pot, classification.n_F)

    def scan(n):
        _m, mu = tile_measures(spec, full, pot, n, eig, capacity=capacity)
        brackets = birkhoff_brackets(spec, full, pot, n, capacity=capacity)
        lower, upper = brackets.lower / n, brackets.upper / n
        if alpha >= gamma:
            threshold = upper >= alpha
        else:
            threshold = lower <= alpha
        crossing = (lower <= alpha) & (alpha <= upper)
        gibbs = gibbs_constants(mu, pot, eig.log_lambda)
        deviation = DeviationRow(
            n=n,
            mu_pairs=0.0,
            mu_threshold=float(mu.weights[threshold].sum()),
            mu_crossing=float(mu.weights[crossing].sum()),
            selected_pairs=0,
            certain_pairs=0,
            gibbs_raw=gibbs.C_raw,
            strongly_primitive=False,
        )
        if alpha != gamma:
            pairs = pairs_alpha(spec, pot, e0, n, alpha, gamma, brackets=brackets)
            deviation.mu_pairs = float(mu.weights[pairs.tiles()].sum())
            deviation.selected_pairs = pairs.selected_count
            deviation.certain_pairs = pairs.certain_count
            deviation.strongly_primitive = bool(pairs.strongly_primitive)
        else:
            deviation.mu_pairs = 1.0
            deviation.selected_pairs = spec.degree**n
        return deviation

    n_range = sorted(n_range)
    rows = _run_ordered(scan, n_range, appsettings.get_thread_count(threads))
    C_mu = max(r.gibbs_raw for r in rows)
    C_alpha = 2 * C_mu * math.exp(constants.log_distortion * (abs(2 * row.derivative) + 1))
    for r in rows:
        r.bound = C_alpha * math.exp(-row.rate * r.n)
        r.holds = r.mu_pairs <= r.bound

    first_valid = None
    for r in reversed(rows):
        if not r.holds:
            break
        first_valid = r.n
    report = DeviationReport(
        alpha=float(alpha),
        gamma=gamma,
        rate=row.rate,
        xi=row.xi,
        rows=rows,
        C_alpha=C_alpha,
        C_mu=C_mu,
        C1=constants.C1,
        diam=constants.diam,
        first_valid_N=first_valid,
        N_formula=(
            math.ceil(2 * constants.log_distortion / abs(alpha - gamma))
            if alpha != gamma
            else None
        ),
    )
    logger.info(
        "Deviation report at alpha %.6g: I = %.6g, C_alpha = %.6g, first valid N = %s",
        alpha,
        row.rate,
        C_alpha,
        first_valid,
    )
    return report
