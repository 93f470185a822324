import math

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from tilepress.exceptions import PreconditionError
from tilepress.pillow import SQRT2, MapSpec, Potential
from tilepress.subsystem import classify
from tilepress.tests.utils import g2, override_appsettings, spec_and_sub
from tilepress.thermo import (
    SplitFunction,
    birkhoff_brackets,
    distortion_check,
    distortion_constants,
    eigen_pair,
    gibbs_constants,
    invariance_defect,
    jacobian_defect,
    partition_sum,
    pressure_estimate,
    split_apply,
    split_apply_iterate,
    tile_measures,
)

ZERO = Potential.zero()


class TestConstants(SimpleTestCase):
    def test_distortion_constants(self):
        spec = MapSpec(3)
        pot = Potential.from_mapping({"signed_bump": 2 * SQRT2})
        constants = distortion_constants(spec, pot, 1, C0=SQRT2, diam=SQRT2)
        self.assertAlmostEqual(constants.C1, 2.1213203435596424, places=12)
        expected = 9 * math.exp(2 * pot.sup_norm + constants.C1 * SQRT2)
        self.assertAlmostEqual(constants.Cbar / expected, 1.0, places=12)

    def test_needs_n_F(self):
        with self.assertRaises(PreconditionError):
            distortion_constants(MapSpec(3), g2(), None, C0=1.0, diam=SQRT2)


class TestPartitionSums(SimpleTestCase):
    def test_zero_potential(self):
        spec, full = spec_and_sub(3)
        estimate = pressure_estimate(spec, full, ZERO, 2)
        self.assertAlmostEqual(estimate.lower, math.log(9), places=10)
        self.assertAlmostEqual(estimate.upper, math.log(9), places=10)
        self.assertTrue(estimate.contains(math.log(9)))

    def test_carpet_zero_potential(self):
        spec, carpet = spec_and_sub(3, "carpet")
        z = partition_sum(spec, carpet, ZERO, 2)
        self.assertAlmostEqual(z.center, 2 * 8**2, places=6)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(min_value=-1.0, max_value=1.0), st.integers(1, 2))
    def test_brackets_are_ordered(self, scale, n):
        spec, full = spec_and_sub(2)
        pot = g2(scale)
        brackets = birkhoff_brackets(spec, full, pot, n, depth=1, grid=9)
        z = partition_sum(spec, full, pot, n, brackets=brackets)
        self.assertLessEqual(z.log_lower, z.log_center + 1e-12)
        self.assertLessEqual(z.log_center, z.log_upper + 1e-12)
        self.assertLessEqual(z.log_upper, z.log_plain_upper + 1e-12)
        self.assertTrue((brackets.lower <= brackets.upper).all())


class TestSplitOperator(SimpleTestCase):
    def test_constant_image(self):
        for preset, expected in (("full", 9.0), ("carpet", 8.0)):
            spec, sub = spec_and_sub(3, preset)
            image = split_apply(spec, sub, ZERO, SplitFunction.constant(9))
            np.testing.assert_allclose(image.values, expected)

    def test_iterate_matches_powers(self):
        spec, full = spec_and_sub(3)
        u = SplitFunction.constant(5)
        np.testing.assert_allclose(split_apply_iterate(spec, full, ZERO, u, 2).values, 81.0)

    @override_appsettings(TILEPRESS_GRID_SIZE=9)
    def test_eigen_pair_zero_potential(self):
        for preset, expected in (("full", 9.0), ("carpet", 8.0)):
            spec, sub = spec_and_sub(3, preset)
            eig = eigen_pair(spec, sub, ZERO)
            self.assertAlmostEqual(eig.lam, expected, places=8)
            self.assertLessEqual(eig.residual, 1e-6)
            np.testing.assert_allclose(eig.u_tilde.values, 1.0, atol=1e-6)
            self.assertAlmostEqual(sum(eig.face_mass), 1.0, places=8)

    def test_eigen_pair_needs_strong_irreducibility(self):
        spec, corner = spec_and_sub(3, "corner")
        with self.assertRaises(PreconditionError):
            eigen_pair(spec, corner, ZERO, G=5, classification=classify(spec, corner, n_cap=2))


class TestMeasures(SimpleTestCase):
    def setUp(self):
        self.spec, self.full = spec_and_sub(3)
        self.eig = eigen_pair(self.spec, self.full, ZERO, G=9)

    def test_uniform_weights(self):
        m_measure, mu_measure = tile_measures(self.spec, self.full, ZERO, 2, self.eig)
        np.testing.assert_allclose(m_measure.weights, 1 / (2 * 81), rtol=1e-6)
        np.testing.assert_allclose(mu_measure.weights, 1 / (2 * 81), rtol=1e-6)
        self.assertAlmostEqual(mu_measure.total, 1.0, places=12)

    def test_gibbs(self):
        _, mu_measure = tile_measures(self.spec, self.full, ZERO, 2, self.eig)
        report = gibbs_constants(mu_measure, ZERO, math.log(9))
        self.assertAlmostEqual(report.C_observed, 1.0, delta=1e-6)
        self.assertEqual(report.level, 2)

    def test_jacobian(self):
        self.assertLess(jacobian_defect(self.spec, self.full, ZERO, 1, self.eig), 1e-6)

    def test_invariance(self):
        pot = g2()
        eig = eigen_pair(self.spec, self.full, pot, G=17)
        _, mu_measure = tile_measures(self.spec, self.full, pot, 3, eig)
        self.assertLessEqual(invariance_defect(self.spec, mu_measure, pot), 0.02)


class TestDistortion(SimpleTestCase):
    def test_g2_laws_hold(self):
        spec, full = spec_and_sub(3)
        pot = g2()
        n_F = classify(spec, full, n_cap=3).n_F
        constants = distortion_constants(spec, pot, n_F)
        report = distortion_check(spec, full, pot, 2, constants, pairs=200)
        self.assertTrue(report.ok, report)
        self.assertEqual(report.same_color_pairs, 200)
