"""
The runnable commands: each takes a :class:`~tilepress.config.RunConfig`, writes its
artifacts to the output directory and returns a summary dictionary.
"""
import logging
import math
import os

import numpy as np

from tilepress import appsettings
from tilepress.cells import build_tiles, level_counts, pair_table
from tilepress.export import TILE_HEADER, tile_rows, write_csv, write_json
from tilepress.ldp import deviation_report, energy_range, pressure_curve, rate_function
from tilepress.subsystem import (
    Subsystem,
    classify,
    entropy,
    forward_invariance_violations,
    limit_set_sample,
    tile_matrix,
)
from tilepress.thermo import (
    distortion_constants,
    eigen_pair,
    gibbs_constants,
    pressure_estimate,
    theoretical_gibbs_constant,
    tile_measures,
)

logger = logging.getLogger(__name__)

__all__ = ("COMMANDS", "Artifacts", "run_command", "rate_alphas")

# The 4 corners of each face are the postcritical points of every pillow map.
POST_CARD = 4
NAMES = ("white", "black")


class Artifacts:
    """
    Writes the enabled output formats into one directory.
    """

    def __init__(self, directory, formats=("csv", "json")):
        self.directory = directory
        self.formats = tuple(formats)
        self.written = []

    def path(self, name):
        return os.path.join(self.directory, name)

    def csv(self, name, header, rows):
        if "csv" in self.formats:
            self.written.append(write_csv(self.path(name), header, rows))

    def json(self, name, data):
        if "json" in self.formats:
            self.written.append(write_json(self.path(name), data))


def _count_rows(spec, sub, n_max):
    for n in range(1, n_max + 1):
        counts = level_counts(spec, sub, n)
        total = sum(map(sum, counts))
        yield (
            n,
            counts[0][0],
            counts[0][1],
            counts[1][0],
            counts[1][1],
            total,
            math.log(total) / n if total else -math.inf,
        )


COUNT_HEADER = (
    "n",
    "white_white",
    "white_black",
    "black_white",
    "black_black",
    "total",
    "log_rate",
)


def describe(config, artifacts, threads=None):
    """
    Combinatorics of the map and the subsystem: degree, tiles, pairs, classification.
    """
    spec = config.spec
    sub = config.subsystem_object()
    n_max = config.levels["n_max"]
    A = tile_matrix(spec, sub)
    classification = classify(spec, sub)
    limit_levels = []
    for n in range(1, min(n_max, 3) + 1):
        sample = limit_set_sample(spec, sub, n, capacity=config.levels["capacity"])
        limit_levels.append(
            {
                "n": n,
                "tiles": len(sample),
                "area": float(sample.area),
                "forward_violations": forward_invariance_violations(
                    spec, sub, n, capacity=config.levels["capacity"]
                ),
            }
        )
    black, _white = pair_table(build_tiles(spec, None, 1), config.e0)
    summary = {
        "m": spec.m,
        "deg": spec.degree,
        "subsystem": sub.name,
        "tiles_n1": sum(map(sum, level_counts(spec, sub, 1))),
        "pairs_n1": len(black),
        "post_card": POST_CARD,
        "A": A.as_list(),
        "classification": classification.as_dict(),
        "limit_set": limit_levels,
    }
    block = build_tiles(spec, sub, 1, keep_words=True)
    artifacts.csv("tiles.csv", TILE_HEADER, tile_rows(block))
    artifacts.csv("counts.csv", COUNT_HEADER, _count_rows(spec, sub, n_max))
    artifacts.json("describe.json", summary)
    return summary


def _integral(value):
    return int(value) if float(value).is_integer() else value


def entropy_command(config, artifacts, threads=None):
    spec = config.spec
    sub = config.subsystem_object()
    A = tile_matrix(spec, sub)
    summary = {"h_top": entropy(A), "rho": _integral(A.rho), "A": A.as_list()}
    artifacts.csv("counts.csv", COUNT_HEADER, _count_rows(spec, sub, config.levels["n_max"]))
    artifacts.json("entropy.json", summary)
    return summary


PRESSURE_HEADER = (
    "n",
    "center",
    "certified_lower",
    "certified_upper",
    "spectral_lower",
    "spectral_upper",
    "spectral_center",
)


def pressure(config, artifacts, threads=None):
    """
    Certified pressure brackets from the partition sums up to ``n_max``.
    """
    spec = config.spec
    sub = config.subsystem_object()
    estimate = pressure_estimate(
        spec,
        sub,
        config.potential_object(),
        config.levels["n_max"],
        capacity=config.levels["capacity"],
    )
    summary = dict(estimate.as_dict(), h_top=entropy(tile_matrix(spec, sub)), width=estimate.width)
    artifacts.csv(
        "pressure.csv",
        PRESSURE_HEADER,
        ([row[key] for key in PRESSURE_HEADER] for row in estimate.rows),
    )
    artifacts.json("pressure.json", summary)
    return summary


def _eigen(config, spec, sub, pot, classification):
    grid = config.grid
    return eigen_pair(
        spec,
        sub,
        pot,
        G=grid["G"],
        tol=grid["tol"],
        max_iter=grid["max_iter"],
        classification=classification,
    )


def _eigen_rows(eig):
    values = eig.u_tilde.values
    G = values.shape[1]
    for face in range(2):
        for i in range(G):
            for j in range(G):
                yield NAMES[face], i, j, values[face, i, j]


def _measure_rows(m_measure, mu_measure):
    block = m_measure.block
    for index in range(len(block)):
        yield (
            NAMES[block.position[index]],
            NAMES[block.color[index]],
            int(block.a[index]),
            int(block.b[index]),
            m_measure.weights[index],
            mu_measure.weights[index],
        )


def gibbs(config, artifacts, threads=None):
    """
    Eigenpair of the split operator, the tile measures at ``n_max`` and their Gibbs
    constants.
    """
    spec = config.spec
    sub = config.subsystem_object()
    pot = config.potential_object()
    n = config.levels["n_max"]
    classification = classify(spec, sub)
    eig = _eigen(config, spec, sub, pot, classification)
    constants = distortion_constants(spec, pot, classification.n_F)
    estimate = pressure_estimate(spec, sub, pot, n, capacity=config.levels["capacity"])
    m_measure, mu_measure = tile_measures(
        spec, sub, pot, n, eig, capacity=config.levels["capacity"]
    )
    report = gibbs_constants(mu_measure, pot, eig.log_lambda)
    summary = {
        "eigen": eig.as_dict(),
        "constants": constants.as_dict(),
        "P_bracket": [estimate.lower, estimate.upper],
        "log_lambda_in_bracket": estimate.contains(eig.log_lambda),
        "gibbs": report.as_dict(),
        "gibbs_theoretical": theoretical_gibbs_constant(constants, eig),
        "classification": classification.as_dict(),
    }
    artifacts.csv("eigenfunction.csv", ("face", "i", "j", "u"), _eigen_rows(eig))
    artifacts.csv(
        "measures.csv",
        ("position", "color", "a", "b", "m", "mu"),
        _measure_rows(m_measure, mu_measure),
    )
    artifacts.json("gibbs.json", summary)
    return summary


def rate_alphas(config, energy):
    """
    The configured alpha levels plus ``rate_points`` levels spread over the open
    energy range.
    """
    values = set(config.alphas(energy))
    count = config.ldp["rate_points"]
    for fraction in np.linspace(-0.9, 0.9, count) if count > 1 else [0.0]:
        if fraction >= 0:
            span = energy.alpha_max_hat - energy.gamma_phi
        else:
            span = energy.gamma_phi - energy.alpha_min_hat
        values.add(float(energy.gamma_phi + fraction * span))
    return sorted(values)


def _rate_table(config, threads):
    spec = config.spec
    curve = pressure_curve(
        spec,
        config.potential_object(),
        t_grid=config.t_grid(),
        method="eigen",
        sub=Subsystem.full(spec),
        G=config.grid["G"],
        tol=config.grid["tol"],
        max_iter=config.grid["max_iter"],
        threads=threads,
    )
    energy = energy_range(curve)
    return rate_function(curve, rate_alphas(config, energy)), energy


def rate(config, artifacts, threads=None):
    """
    Pressure curve of the full map and the rate function of its Birkhoff averages.
    """
    table, energy = _rate_table(config, threads)
    curve = table.curve
    summary = dict(table.as_dict(), max_legendre_residual=max(table.legendre_residuals))
    artifacts.csv(
        "pressure_curve.csv",
        ("t", "p", "dp", "ddp"),
        ([row["t"], row["p"], row["dp"], row["ddp"]] for row in curve.rows()),
    )
    artifacts.csv(
        "rate.csv",
        ("alpha", "xi", "I", "I_legendre", "I_prime"),
        ((r.alpha, r.xi, r.rate, r.legendre, r.derivative) for r in table.rows),
    )
    artifacts.json("rate.json", summary)
    return summary


DEVIATION_HEADER = (
    "alpha",
    "n",
    "mu_pairs",
    "mu_threshold",
    "mu_crossing",
    "selected_pairs",
    "certain_pairs",
    "gibbs_raw",
    "strongly_primitive",
    "bound",
    "holds",
    "slope",
)


def deviation(config, artifacts, threads=None):
    """
    Equilibrium mass of the deviation sets against the large-deviation bound, for
    every configured alpha.
    """
    spec = config.spec
    pot = config.potential_object()
    full = Subsystem.full(spec)
    table, energy = _rate_table(config, threads)
    classification = classify(spec, full)
    eig = _eigen(config, spec, full, pot, classification)
    constants = distortion_constants(spec, pot, classification.n_F)
    reports = [
        deviation_report(
            spec,
            pot,
            config.e0,
            alpha,
            config.n_range,
            table,
            eig=eig,
            constants=constants,
            threads=threads,
            capacity=config.levels["capacity"],
        )
        for alpha in config.alphas(energy)
    ]
    summary = {
        "e0": config.e0.value,
        "energy": energy.as_dict(),
        "reports": [report.as_dict() for report in reports],
    }
    artifacts.csv(
        "deviation.csv",
        DEVIATION_HEADER,
        (
            [report.alpha] + [row.as_dict()[key] for key in DEVIATION_HEADER[1:]]
            for report in reports
            for row in report.rows
        ),
    )
    artifacts.json("deviation.json", summary)
    return summary


COMMANDS = {
    "describe": describe,
    "entropy": entropy_command,
    "pressure": pressure,
    "gibbs": gibbs,
    "rate": rate,
    "deviation": deviation,
}


def run_command(name, config, directory=None, threads=None):
    """
    Run one command and write its artifacts.

    :returns: ``(summary, artifacts)``
    """
    directory = config.output["directory"] if directory is None else directory
    artifacts = Artifacts(directory, config.output["formats"])
    threads = appsettings.get_thread_count(threads)
    logger.info("Running %s for m=%d into %s", name, config.m, directory)
    summary = COMMANDS[name](config, artifacts, threads=threads)
    return summary, artifacts
