import math

import numpy as np
from django.test import SimpleTestCase

from tilepress.cells import EdgeLabel
from tilepress.exceptions import (
    ConvergenceError,
    ConvexityGateError,
    PreconditionError,
    RangeError,
)
from tilepress.ldp import (
    PressureCurve,
    deviation_report,
    energy_range,
    measure_energy,
    pairs_alpha,
    pressure_curve,
    rate_function,
)
from tilepress.pillow import Potential
from tilepress.tests.utils import g2, override_appsettings, spec_and_sub
from tilepress.thermo import birkhoff_brackets, eigen_pair, tile_measures

T_GRID = np.linspace(-4.0, 4.0, 81)


def cosh_curve():
    # Pressure of a fair coin-flip potential on top of log 9.
    return PressureCurve.from_values(T_GRID, math.log(9) + np.log(np.cosh(T_GRID)), "synthetic")


def cosh_rate(alpha):
    xi = math.atanh(alpha)
    return math.log(math.cosh(1.0)) - math.log(math.cosh(xi)) + (xi - 1.0) * alpha


class TestRateFunction(SimpleTestCase):
    def test_energy_range(self):
        energy = energy_range(cosh_curve())
        self.assertAlmostEqual(energy.gamma_phi, math.tanh(1.0), delta=1e-3)
        self.assertAlmostEqual(energy.alpha_min_hat, -math.tanh(4.0), delta=1e-3)
        self.assertAlmostEqual(energy.alpha_max_hat, math.tanh(4.0), delta=1e-3)

    def test_vanishes_at_gamma(self):
        curve = cosh_curve()
        table = rate_function(curve, [curve.derivative(1.0)])
        row = table.rows[0]
        self.assertAlmostEqual(row.rate, 0.0, places=10)
        self.assertAlmostEqual(row.xi, 1.0, places=8)
        self.assertAlmostEqual(row.derivative, 0.0, places=8)

    def test_matches_closed_form(self):
        table = rate_function(cosh_curve(), [-0.5, 0.0, 0.5])
        self.assertEqual([row.alpha for row in table.rows], [-0.5, 0.0, 0.5])
        for row in table.rows:
            self.assertAlmostEqual(row.rate, cosh_rate(row.alpha), delta=1e-3)
            self.assertAlmostEqual(row.xi, math.atanh(row.alpha), delta=1e-3)
        self.assertLessEqual(max(table.legendre_residuals), 1e-5)

    def test_rate_is_convex(self):
        alphas = np.linspace(-0.9, 0.9, 19)
        rates = np.array([row.rate for row in rate_function(cosh_curve(), alphas).rows])
        self.assertTrue((np.diff(rates, 2) >= -1e-9).all())
        self.assertTrue((rates >= -1e-9).all())

    def test_row_for(self):
        table = rate_function(cosh_curve(), [0.5])
        self.assertIs(table.row_for(0.5), table.rows[0])
        self.assertAlmostEqual(table.row_for(0.25).rate, cosh_rate(0.25), delta=1e-3)

    def test_outside_range(self):
        with self.assertRaises(RangeError):
            rate_function(cosh_curve(), [2.0])

    def test_flat_curve(self):
        with self.assertRaises(ConvexityGateError):
            PressureCurve.from_values(T_GRID, math.log(9) + 0.3 * T_GRID, "synthetic")


class TestPressureCurve(SimpleTestCase):
    def test_grid_preconditions(self):
        spec, _ = spec_and_sub(2)
        with self.assertRaises(PreconditionError):
            pressure_curve(spec, g2(), t_grid=[0.0, 1.0, 2.0])
        with self.assertRaises(PreconditionError):
            pressure_curve(spec, g2(), t_grid=[0.0, 2.0, 1.0, 3.0])
        with self.assertRaises(PreconditionError):
            pressure_curve(spec, g2(), t_grid=T_GRID, method="spline")

    @override_appsettings(TILEPRESS_T_MAX=2)
    def test_t_max(self):
        spec, _ = spec_and_sub(2)
        with self.assertRaises(PreconditionError):
            pressure_curve(spec, g2(), t_grid=T_GRID)

    def test_eigen_curve(self):
        spec, _ = spec_and_sub(2)
        t_grid = np.linspace(-2.0, 2.0, 9)
        single = pressure_curve(spec, g2(0.5), t_grid=t_grid, G=9, threads=1)
        threaded = pressure_curve(spec, g2(0.5), t_grid=t_grid, G=9, threads=2)
        self.assertAlmostEqual(single.value(0.0), math.log(4), places=8)
        np.testing.assert_array_equal(single.p, threaded.p)
        self.assertTrue((single.ddp > 0).any())
        # The potential is face-antisymmetric, so p is even.
        np.testing.assert_allclose(single.p, single.p[::-1], atol=1e-6)

    def test_eigen_curve_iteration_budget(self):
        spec, _ = spec_and_sub(2)
        t_grid = np.linspace(-2.0, 2.0, 9)
        with self.assertRaises(ConvergenceError):
            pressure_curve(spec, g2(0.5), t_grid=t_grid, G=9, threads=1, max_iter=1)

    def test_zn_bracket_curve(self):
        spec, _ = spec_and_sub(2)
        t_grid = np.linspace(-1.0, 1.0, 5)
        curve = pressure_curve(spec, g2(0.5), t_grid=t_grid, method="zn_bracket", n_max=2)
        self.assertEqual(curve.source, "zn_bracket")
        self.assertAlmostEqual(curve.value(0.0), math.log(4), places=10)


class TestPairs(SimpleTestCase):
    def setUp(self):
        self.spec, self.full = spec_and_sub(3)
        self.pot = g2(1.0)

    def test_selection(self):
        brackets = birkhoff_brackets(self.spec, self.full, self.pot, 2, depth=1, grid=9)
        pairs = pairs_alpha(self.spec, self.pot, EdgeLabel.BOTTOM, 2, 0.5, 0.0, brackets=brackets)
        self.assertEqual(len(pairs.black), 81)
        self.assertLessEqual(pairs.certain_count, pairs.selected_count)
        self.assertGreater(pairs.selected_count, 0)
        self.assertTrue(pairs.covers_sphere())
        self.assertEqual(len(pairs.tiles()), 2 * pairs.selected_count)
        self.assertIsNotNone(pairs.strongly_primitive)

    def test_alpha_equals_gamma(self):
        with self.assertRaises(PreconditionError):
            pairs_alpha(self.spec, self.pot, EdgeLabel.TOP, 1, 0.2, 0.2)


class TestPairMass(SimpleTestCase):
    def setUp(self):
        self.spec, full = spec_and_sub(2)
        self.pot = g2(1.0)
        self.brackets = birkhoff_brackets(self.spec, full, self.pot, 2, depth=1, grid=9)
        eig = eigen_pair(self.spec, full, self.pot, G=9)
        _m, self.mu = tile_measures(self.spec, full, self.pot, 2, eig)

    def mass(self, alpha):
        pairs = pairs_alpha(
            self.spec, self.pot, EdgeLabel.LEFT, 2, alpha, 0.0, brackets=self.brackets
        )
        return float(self.mu.weights[pairs.tiles()].sum())

    def test_pairs_carry_all_mass(self):
        pairs = pairs_alpha(
            self.spec, self.pot, EdgeLabel.LEFT, 2, 0.5, 0.0, brackets=self.brackets
        )
        total = self.mu.weights[np.concatenate([pairs.black, pairs.white])].sum()
        self.assertAlmostEqual(float(total), 1.0, places=12)

    def test_mass_shrinks_away_from_gamma(self):
        above = [self.mass(alpha) for alpha in (0.05, 0.2, 0.4, 0.6, 0.8, 5.0)]
        below = [self.mass(-alpha) for alpha in (0.05, 0.2, 0.4, 0.6, 0.8, 5.0)]
        for masses in (above, below):
            self.assertTrue(all(b <= a + 1e-12 for a, b in zip(masses, masses[1:])), masses)
            self.assertLessEqual(masses[0], 1.0 + 1e-12)
            self.assertEqual(masses[-1], 0.0)


class TestDeviation(SimpleTestCase):
    def test_zero_energy(self):
        spec, full = spec_and_sub(3)
        zero = Potential.zero()
        eig = eigen_pair(spec, full, zero, G=5)
        _, mu = tile_measures(spec, full, zero, 1, eig)
        self.assertEqual(measure_energy(mu, zero), 0.0)

    def test_report(self):
        spec, full = spec_and_sub(2)
        pot = g2(0.5)
        curve = pressure_curve(spec, pot, t_grid=np.linspace(-2.0, 2.0, 9), G=9)
        energy = energy_range(curve)
        alpha = energy.gamma_phi + 0.5 * (energy.alpha_max_hat - energy.gamma_phi)
        rate = rate_function(curve, [alpha])
        eig = eigen_pair(spec, full, pot, G=9)
        report = deviation_report(spec, pot, EdgeLabel.BOTTOM, alpha, [2, 1], rate, eig=eig)
        self.assertEqual([row.n for row in report.rows], [1, 2])
        self.assertGreaterEqual(report.C_alpha, 2.0)
        self.assertGreater(report.rate, 0.0)
        for row in report.rows:
            self.assertTrue(0.0 <= row.mu_pairs <= 1.0 + 1e-12)
            self.assertAlmostEqual(row.bound, report.C_alpha * math.exp(-report.rate * row.n))
            self.assertEqual(row.holds, row.mu_pairs <= row.bound)
        distortion = report.C1 * report.diam**pot.kappa
        gap = abs(report.alpha - report.gamma)
        self.assertGreaterEqual(report.N_formula * gap, 2 * distortion - 1e-9)
        self.assertLess((report.N_formula - 1) * gap, 2 * distortion + 1e-9)
        data = report.as_dict()
        self.assertEqual(data["I_alpha"], report.rate)
        self.assertIn("C_mu", data["C_alpha_components"])
