"""
The property suite: named checks of the invariants of every module, run against one
configuration.

A check returns ``(passed, measured)``. Checks that depend on an earlier failure are
reported as skipped, never as passed.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
from django.core.exceptions import ImproperlyConfigured

from tilepress.cells import EdgeLabel, build_tiles, level_counts, local_degree_matrix, pair_table
from tilepress.commands import rate_alphas
from tilepress.exceptions import CapacityError, ConvexityGateError, TilepressError
from tilepress.ldp import deviation_report, energy_range, pressure_curve, rate_function
from tilepress.pillow import (
    BASIS_NAMES,
    Color,
    Potential,
    apply_map,
    canonicalize_point,
    inverse_branch,
    path_distance_array,
)
from tilepress.subsystem import (
    Subsystem,
    classify,
    entropy,
    forward_invariance_violations,
    limit_set_sample,
    tile_matrix,
)
from tilepress.thermo import (
    distortion_check,
    distortion_constants,
    eigen_pair,
    gibbs_constants,
    invariance_defect,
    jacobian_defect,
    measure_expansion_constant,
    partition_sum,
    pressure_estimate,
    theoretical_gibbs_constant,
    tile_measures,
)

logger = logging.getLogger(__name__)

__all__ = ("CHECKS", "GROUPS", "CheckResult", "VerifyReport", "VerifyContext", "verify")

PASS, FAIL, SKIP = "pass", "fail", "skip"
GROUPS = ("pillow", "cells", "subsystem", "thermo", "ldp")
CHECKS = []


def check(name):
    """
    Register a check; its group is the part of the name before the dot.
    """

    def register(func):
        CHECKS.append((name, func))
        return func

    return register


class Skipped(Exception):
    pass


@dataclass
class CheckResult:
    name: str
    status: str
    measured: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def group(self):
        return self.name.split(".", 1)[0]

    def as_dict(self):
        return {
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "detail": self.detail,
        }


@dataclass
class VerifyReport:
    results: list

    @property
    def failures(self):
        return [result for result in self.results if result.status == FAIL]

    @property
    def ok(self):
        return not self.failures

    def as_dict(self):
        return {
            "ok": self.ok,
            "failed": [result.name for result in self.failures],
            "checks": [result.as_dict() for result in self.results],
        }


class VerifyContext:
    """
    Lazily computed objects shared between checks.
    """

    def __init__(self, config, potential=None, seed=0):
        self.config = config
        self.spec = config.spec
        self.sub = config.subsystem_object()
        self.full = Subsystem.full(self.spec)
        self.pot = config.potential_object() if potential is None else potential
        self.n_max = config.levels["n_max"]
        self.capacity = config.levels["capacity"]
        self.rng = np.random.default_rng(seed)

    def affordable(self, sub, n):
        return sum(map(sum, level_counts(self.spec, sub, n))) <= self.capacity

    @cached_property
    def classification(self):
        return classify(self.spec, self.sub)

    @cached_property
    def eig(self):
        if not self.classification.strongly_irreducible:
            raise Skipped("subsystem not known to be strongly irreducible")
        grid = self.config.grid
        return eigen_pair(
            self.spec,
            self.sub,
            self.pot,
            G=grid["G"],
            tol=grid["tol"],
            max_iter=grid["max_iter"],
            classification=self.classification,
        )

    @cached_property
    def constants(self):
        if self.classification.n_F is None:
            raise Skipped("n_F unknown at the search cap")
        return distortion_constants(self.spec, self.pot, self.classification.n_F)

    @cached_property
    def curve(self):
        return pressure_curve(
            self.spec,
            self.pot,
            t_grid=self.config.t_grid(),
            sub=self.full,
            G=self.config.grid["G"],
            tol=self.config.grid["tol"],
            max_iter=self.config.grid["max_iter"],
        )

    @cached_property
    def rate(self):
        try:
            curve = self.curve
            return rate_function(curve, rate_alphas(self.config, energy_range(curve)))
        except ConvexityGateError as e:
            raise Skipped("convexity gate: {0}".format(e))

    @cached_property
    def full_classification(self):
        return classify(self.spec, self.full)

    @cached_property
    def full_eig(self):
        if self.sub.is_full(self.spec):
            return self.eig
        grid = self.config.grid
        return eigen_pair(
            self.spec,
            self.full,
            self.pot,
            G=grid["G"],
            tol=grid["tol"],
            max_iter=grid["max_iter"],
            classification=self.full_classification,
        )

    @cached_property
    def deviations(self):
        rate = self.rate
        constants = distortion_constants(self.spec, self.pot, self.full_classification.n_F)
        energy = energy_range(rate.curve)
        return [
            deviation_report(
                self.spec,
                self.pot,
                self.config.e0,
                alpha,
                self.config.n_range,
                rate,
                eig=self.full_eig,
                constants=constants,
                capacity=self.capacity,
            )
            for alpha in self.config.alphas(energy)
        ]


def _boundary_points(count):
    t = np.linspace(0.0, 1.0, count)
    zeros, ones = np.zeros(count), np.ones(count)
    x = np.concatenate([t, t, zeros, ones])
    y = np.concatenate([zeros, ones, t, t])
    return x, y


@check("pillow.gluing")
def check_gluing(ctx):
    x, y = _boundary_points(101)
    white = ctx.pot.evaluate(np.zeros_like(x, dtype=int), x, y)
    black = ctx.pot.evaluate(np.ones_like(x, dtype=int), x, y)
    gap = float(np.abs(white - black).max())
    return gap <= 1e-12, {"max_gap": gap}


@check("pillow.holder")
def check_holder(ctx):
    count = 2000
    face = ctx.rng.integers(0, 2, count)
    p = (face, ctx.rng.random(count), ctx.rng.random(count))
    q = (face, ctx.rng.random(count), ctx.rng.random(count))
    distance = path_distance_array(*p, *q)
    change = np.abs(ctx.pot.evaluate(*p) - ctx.pot.evaluate(*q))
    excess = float((change - ctx.pot.holder_seminorm * distance**ctx.pot.kappa).max())
    return excess <= 1e-12, {"worst_excess": excess, "seminorm": ctx.pot.holder_seminorm}


@check("pillow.inverse_branches")
def check_inverse_branches(ctx):
    failures = 0
    total = 0
    for _ in range(50):
        face = Color(int(ctx.rng.integers(0, 2)))
        p = canonicalize_point(face, *ctx.rng.random(2))
        for label in ctx.spec.labels():
            if label.color is not p.face and not p.on_equator:
                continue
            image = apply_map(ctx.spec, inverse_branch(ctx.spec, label, p))
            total += 1
            if abs(image.x - p.x) > 1e-12 or abs(image.y - p.y) > 1e-12 or image.face != p.face:
                failures += 1
    return not failures, {"round_trips": total, "failures": failures}


@check("pillow.expansion")
def check_expansion(ctx):
    C0 = measure_expansion_constant(ctx.spec, max_level=3, samples=128)
    return C0 <= 1 + 1e-9, {"C0": C0}


@check("cells.tile_counts")
def check_tile_counts(ctx):
    A = tile_matrix(ctx.spec, ctx.sub)
    mismatches = []
    checked = []
    for n in range(1, min(ctx.n_max, 6) + 1):
        if not ctx.affordable(ctx.sub, n):
            break
        block = build_tiles(ctx.spec, ctx.sub, n)
        counts = np.zeros((2, 2), dtype=np.int64)
        np.add.at(counts, (block.position.astype(np.int64), block.color.astype(np.int64)), 1)
        if counts.tolist() != (A**n).as_list():
            mismatches.append(n)
        checked.append(n)
    return not mismatches, {"levels": checked, "mismatches": mismatches}


def _grid_vertex(ctx, denominator):
    face = Color(int(ctx.rng.integers(0, 2)))
    a, b = (int(v) for v in ctx.rng.integers(0, denominator + 1, 2))
    return canonicalize_point(face, Fraction(a, denominator), Fraction(b, denominator))


@check("cells.local_degree_cocycle")
def check_cocycle(ctx):
    failures = []
    for _ in range(50):
        p = _grid_vertex(ctx, ctx.spec.m**2)
        for n, k in ((1, 1), (1, 2), (2, 1), (2, 2)):
            image = p
            for _step in range(n):
                image = apply_map(ctx.spec, image)
            whole = local_degree_matrix(ctx.spec, ctx.sub, p, n + k)
            split = local_degree_matrix(ctx.spec, ctx.sub, p, n) @ local_degree_matrix(
                ctx.spec, ctx.sub, image, k
            )
            if whole != split:
                failures.append({"point": [int(p.face), str(p.x), str(p.y)], "n": n, "k": k})
    return not failures, {"points": 50, "failures": failures[:5]}


@check("cells.pairs")
def check_pairs(ctx):
    measured = {}
    ok = True
    for n in range(1, min(ctx.n_max, 4) + 1):
        if not ctx.affordable(ctx.full, n):
            break
        block = build_tiles(ctx.spec, None, n)
        for e0 in EdgeLabel:
            black, white = pair_table(block, e0)
            tiles = np.concatenate([black, white])
            exact = len(black) == ctx.spec.degree**n and len(np.unique(tiles)) == len(block)
            ok = ok and exact
            measured["{0}/{1}".format(n, e0.value)] = len(black)
    return ok, measured


@check("subsystem.entropy")
def check_entropy(ctx):
    A = tile_matrix(ctx.spec, ctx.sub)
    h = entropy(A)
    ok = True
    if ctx.sub.is_full(ctx.spec):
        ok = abs(h - 2 * math.log(ctx.spec.m)) <= 1e-12
    # rho(A)**n is at most the total count of n-tiles.
    for n in range(1, 7):
        ok = ok and A.rho**n <= (A**n).total * (1 + 1e-12)
    return ok, {"h_top": h, "rho": A.rho}


@check("subsystem.limit_set")
def check_limit_set(ctx):
    violations = {}
    nested = True
    previous = None
    for n in range(1, min(ctx.n_max, 3) + 1):
        if not ctx.affordable(ctx.sub, n + 1):
            break
        violations[n] = forward_invariance_violations(ctx.spec, ctx.sub, n, capacity=ctx.capacity)
        sample = limit_set_sample(ctx.spec, ctx.sub, n, capacity=ctx.capacity)
        if previous is not None:
            nested = nested and previous.contains(sample)
        previous = sample
    return nested and not any(violations.values()), {
        "forward_violations": violations,
        "nested": nested,
    }


@check("subsystem.classification")
def check_classification(ctx):
    result = ctx.classification
    return result.strongly_irreducible, result.as_dict()


@check("thermo.pressure_zero")
def check_pressure_zero(ctx):
    h = entropy(tile_matrix(ctx.spec, ctx.sub))
    n = min(ctx.n_max, 3)
    estimate = pressure_estimate(ctx.spec, ctx.sub, Potential.zero(), n, capacity=ctx.capacity)
    gap = max(abs(estimate.lower - h), abs(estimate.upper - h))
    return gap <= 1e-9, {"h_top": h, "P_bracket": [estimate.lower, estimate.upper]}


@check("thermo.submultiplicativity")
def check_submultiplicativity(ctx):
    sums = {}
    for n in range(1, ctx.n_max + 1):
        if not ctx.affordable(ctx.sub, n):
            break
        sums[n] = partition_sum(ctx.spec, ctx.sub, ctx.pot, n, capacity=ctx.capacity)
    worst = -math.inf
    for k in sums:
        for l in sums:
            if k + l in sums:
                gap = sums[k + l].log_lower - sums[k].log_upper - sums[l].log_upper
                worst = max(worst, gap)
    return worst <= 1e-9, {"levels": sorted(sums), "worst_log_gap": worst}


@check("thermo.pressure_bracket")
def check_pressure_bracket(ctx):
    eig = ctx.eig
    estimate = pressure_estimate(ctx.spec, ctx.sub, ctx.pot, ctx.n_max, capacity=ctx.capacity)
    return estimate.contains(eig.log_lambda, slack=1e-9), {
        "log_lambda": eig.log_lambda,
        "P_bracket": [estimate.lower, estimate.upper],
        "width": estimate.width,
    }


@check("thermo.eigen_residual")
def check_eigen_residual(ctx):
    return ctx.eig.residual <= 1e-6, {"residual": ctx.eig.residual, "G": ctx.config.grid["G"]}


@check("thermo.eigen_bounds")
def check_eigen_bounds(ctx):
    low, high = ctx.eig.bounds
    Cbar = ctx.constants.Cbar
    return ctx.eig.within(Cbar), {"u_min": low, "u_max": high, "Cbar": Cbar}


@check("thermo.distortion")
def check_distortion(ctx):
    n = min(ctx.n_max, 3)
    report = distortion_check(ctx.spec, ctx.sub, ctx.pot, n, ctx.constants)
    return report.ok, {
        "level": n,
        "same_color_violations": report.same_color_violations,
        "cross_color_violations": report.cross_color_violations,
        "same_color_worst_excess": report.same_color_worst_excess,
    }


@check("thermo.jacobian")
def check_jacobian(ctx):
    n = max(min(ctx.n_max, 4) - 1, 1)
    defect = jacobian_defect(ctx.spec, ctx.sub, ctx.pot, n, ctx.eig, capacity=ctx.capacity)
    bound = 2 * ctx.constants.log_distortion
    return defect <= bound + 1e-6, {"level": n, "defect": defect, "bound": bound}


@check("thermo.gibbs")
def check_gibbs(ctx):
    n = min(ctx.n_max, 5)
    _m, mu = tile_measures(ctx.spec, ctx.sub, ctx.pot, n, ctx.eig, capacity=ctx.capacity)
    report = gibbs_constants(mu, ctx.pot, ctx.eig.log_lambda)
    measured = report.as_dict()
    if ctx.pot.is_zero:
        return abs(report.C_observed - 1.0) <= 1e-9, measured
    theoretical = theoretical_gibbs_constant(ctx.constants, ctx.eig)
    measured["theoretical"] = theoretical
    return report.C_raw <= theoretical, measured


@check("thermo.invariance")
def check_invariance(ctx):
    n = min(ctx.n_max, 6)
    _m, mu = tile_measures(ctx.spec, ctx.sub, ctx.pot, n, ctx.eig, capacity=ctx.capacity)
    defects = {
        name: invariance_defect(ctx.spec, mu, Potential.from_mapping({name: 1.0}))
        for name in BASIS_NAMES
    }
    return max(defects.values()) <= 0.02, {"level": n, "defects": defects}


@check("ldp.convexity_gate")
def check_convexity_gate(ctx):
    try:
        curve = ctx.curve
    except ConvexityGateError as e:
        return False, {"error": str(e)}
    second = np.diff(curve.p, 2)
    return bool((second >= -1e-9).all()), {
        "max_ddp": float(curve.ddp.max()),
        "min_second_difference": float(second.min()),
    }


@check("ldp.rate_identities")
def check_rate_identities(ctx):
    rate = ctx.rate
    row = rate.row_for(rate.gamma_phi)
    ok = abs(row.rate) <= 1e-6 and abs(row.xi - 1.0) <= 1e-6
    return ok, {"gamma_phi": rate.gamma_phi, "I_gamma": row.rate, "xi_gamma": row.xi}


@check("ldp.rate_convexity")
def check_rate_convexity(ctx):
    rows = ctx.rate.rows
    xi = np.array([row.xi for row in rows])
    increasing = bool((np.diff(xi) > 0).all())
    alphas = np.array([row.alpha for row in rows])
    values = np.array([row.rate for row in rows])
    # Second divided differences on a possibly uneven alpha grid.
    slopes = np.diff(values) / np.diff(alphas)
    convex = bool((np.diff(slopes) > 0).all())
    return increasing and convex, {"xi_increasing": increasing, "convex": convex}


@check("ldp.legendre")
def check_legendre(ctx):
    residual = max(ctx.rate.legendre_residuals)
    return residual <= 1e-4, {"max_residual": residual, "points": len(ctx.rate.rows)}


@check("ldp.derivative_identity")
def check_derivative_identity(ctx):
    slope = ctx.rate.curve.derivative(1.0)
    n = min(ctx.n_max, 5)
    _m, mu = tile_measures(ctx.spec, ctx.full, ctx.pot, n, ctx.full_eig, capacity=ctx.capacity)
    cx, cy = mu.block.centers()
    energy = mu.integrate(ctx.pot.evaluate(mu.block.position, cx, cy))
    return abs(slope - energy) <= 0.05, {"dp_at_1": slope, "energy": energy, "level": n}


@check("ldp.deviation_bound")
def check_deviation_bound(ctx):
    measured = {}
    ok = True
    for report in ctx.deviations:
        measured[str(report.alpha)] = {
            "first_valid_N": report.first_valid_N,
            "N_formula": report.N_formula,
            "C_alpha": report.C_alpha,
        }
        ok = ok and report.first_valid_N is not None
    return ok, measured


@check("ldp.deviation_slope")
def check_deviation_slope(ctx):
    measured = {}
    ok = True
    for report in ctx.deviations:
        rows = [row for row in report.rows if row.n >= 4] or report.rows
        slopes = [row.slope for row in rows]
        monotone = all(b >= a - 1e-12 for a, b in zip(slopes, slopes[1:]))
        close = slopes[-1] <= report.rate + 0.1
        ok = ok and monotone and close
        measured[str(report.alpha)] = {"slopes": slopes, "I_alpha": report.rate}
    return ok, measured


@check("ldp.pairs_strongly_primitive")
def check_pairs_primitive(ctx):
    measured = {}
    ok = True
    for report in ctx.deviations:
        start = report.first_valid_N or report.rows[-1].n
        flags = {row.n: row.strongly_primitive for row in report.rows if row.n >= start}
        ok = ok and all(flags.values())
        measured[str(report.alpha)] = flags
    return ok, measured


def _select(only):
    if not only:
        return CHECKS
    wanted = set(only)
    unknown = wanted - set(GROUPS) - {name for name, _func in CHECKS}
    if unknown:
        raise ImproperlyConfigured("Unknown checks: {0}".format(", ".join(sorted(unknown))))
    return [
        (name, func)
        for name, func in CHECKS
        if name in wanted or name.split(".", 1)[0] in wanted
    ]


def verify(config, only=None, potential=None, seed=0):
    """
    Run the property suite.

    :param only: check names or group names to run; all checks when empty.
    :param potential: replaces the configured potential (used to inject a broken one).
    :raises CapacityError: when a check would exceed the enumeration capacity.
    :rtype: VerifyReport
    """
    ctx = VerifyContext(config, potential=potential, seed=seed)
    results = []
    for name, func in _select(only):
        try:
            passed, measured = func(ctx)
            result = CheckResult(name, PASS if passed else FAIL, measured)
        except Skipped as e:
            result = CheckResult(name, SKIP, detail=str(e))
        except CapacityError:
            raise
        except TilepressError as e:
            result = CheckResult(name, FAIL, {"error": type(e).__name__}, detail=str(e))
        if result.status == FAIL:
            logger.warning("Check %s failed: %s %s", name, result.measured, result.detail)
        else:
            logger.info("Check %s: %s", name, result.status)
        results.append(result)
    return VerifyReport(results)
