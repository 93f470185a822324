import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from tilepress.exceptions import DomainError, PreconditionError
from tilepress.pillow import (
    SQRT2,
    Color,
    MapSpec,
    OneTileLabel,
    Potential,
    apply_map,
    apply_map_array,
    canonicalize_point,
    eval_potential,
    inverse_branch,
    iterate_spec,
    measure_diameter,
    path_distance,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
exact = st.fractions(min_value=0, max_value=1, max_denominator=60)


class TestMapSpec(SimpleTestCase):
    def test_degree(self):
        spec = MapSpec(3)
        self.assertEqual(spec.degree, 9)
        self.assertEqual(spec.expansion, 3)
        self.assertEqual(len(spec.labels()), 18)

    def test_invalid_factor(self):
        with self.assertRaises(PreconditionError):
            MapSpec(1)

    def test_iterate(self):
        self.assertEqual(iterate_spec(MapSpec(3), 2), MapSpec(9))
        with self.assertRaises(PreconditionError):
            iterate_spec(MapSpec(3), 0)

    def test_label_colors(self):
        self.assertEqual(OneTileLabel(Color.WHITE, 0, 0).color, Color.WHITE)
        self.assertEqual(OneTileLabel(Color.WHITE, 1, 0).color, Color.BLACK)
        self.assertEqual(OneTileLabel(Color.BLACK, 1, 0).color, Color.WHITE)
        self.assertEqual(OneTileLabel(Color.BLACK, 1, 0).position, Color.BLACK)


class TestPoints(SimpleTestCase):
    def test_equator_is_white(self):
        p = canonicalize_point("black", 0, 0.5)
        self.assertEqual(p.face, Color.WHITE)
        self.assertTrue(p.on_equator)
        self.assertTrue(p.on_face(Color.BLACK))

    def test_outside(self):
        with self.assertRaises(DomainError):
            canonicalize_point("white", 1.5, 0.5)

    def test_apply_map_exact(self):
        spec = MapSpec(3)
        p = canonicalize_point("white", Fraction(1, 6), Fraction(1, 6))
        half = Fraction(1, 2)
        self.assertEqual(apply_map(spec, p), canonicalize_point("white", half, half))
        q = canonicalize_point("white", Fraction(1, 2), Fraction(1, 6))
        self.assertEqual(apply_map(spec, q), canonicalize_point("black", half, half))

    def test_inverse_branch(self):
        spec = MapSpec(3)
        label = OneTileLabel(Color.WHITE, 1, 0)
        p = canonicalize_point("black", 0.3, 0.7)
        image = apply_map(spec, inverse_branch(spec, label, p))
        self.assertEqual(image.face, Color.BLACK)
        self.assertAlmostEqual(image.x, 0.3, places=12)
        self.assertAlmostEqual(image.y, 0.7, places=12)

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([2, 3]), st.integers(1, 3), st.integers(0, 1), exact, exact)
    def test_iterate_is_composition(self, m, k, face, x, y):
        spec = MapSpec(m)
        p = canonicalize_point(Color(face), x, y)
        composed = p
        for _ in range(k):
            composed = apply_map(spec, composed)
        self.assertEqual(apply_map(iterate_spec(spec, k), p), composed)

    @settings(max_examples=50, deadline=None)
    @given(
        st.sampled_from([2, 3, 4]),
        st.integers(0, 1),
        st.integers(0, 3),
        st.integers(0, 3),
        exact,
        exact,
    )
    def test_inverse_branch_round_trip(self, m, home, i, j, x, y):
        spec = MapSpec(m)
        label = OneTileLabel(Color(home), i % m, j % m)
        p = canonicalize_point(label.color, x, y)
        preimage = inverse_branch(spec, label, p)
        self.assertTrue(preimage.on_face(label.home_face))
        self.assertEqual(apply_map(spec, preimage), p)

    def test_inverse_branch_wrong_face(self):
        spec = MapSpec(3)
        with self.assertRaises(PreconditionError):
            inverse_branch(
                spec, OneTileLabel(Color.WHITE, 0, 0), canonicalize_point("black", 0.3, 0.3)
            )

    @settings(max_examples=50, deadline=None)
    @given(st.sampled_from([2, 3, 4]), st.integers(0, 1), unit, unit)
    def test_array_agrees(self, m, face, x, y):
        spec = MapSpec(m)
        single = apply_map(spec, canonicalize_point(Color(face), x, y))
        faces, xs, ys = apply_map_array(spec, np.array([face]), np.array([x]), np.array([y]))
        self.assertAlmostEqual(float(xs[0]), single.x, places=9)
        self.assertAlmostEqual(float(ys[0]), single.y, places=9)
        if min(single.x, 1 - single.x, single.y, 1 - single.y) > 1e-9:
            self.assertEqual(int(faces[0]), int(single.face))


class TestDistance(SimpleTestCase):
    def test_same_face(self):
        p = canonicalize_point("white", 0.1, 0.2)
        q = canonicalize_point("white", 0.4, 0.6)
        self.assertAlmostEqual(path_distance(p, q), 0.5)

    def test_across_equator(self):
        p = canonicalize_point("white", 0.5, 0.1)
        q = canonicalize_point("black", 0.5, 0.1)
        self.assertAlmostEqual(path_distance(p, q), 0.2)

    def test_diameter(self):
        self.assertAlmostEqual(measure_diameter(resolution=11), SQRT2, places=12)


class TestPotential(SimpleTestCase):
    def test_aliases(self):
        pot = Potential.from_mapping({"g2": 0.3, "g1": 0.5})
        self.assertEqual(pot.as_mapping(), {"cos_cos": 0.5, "signed_sin": 0.3})

    def test_face_sign(self):
        pot = Potential.from_mapping({"g2": 0.3})
        self.assertAlmostEqual(eval_potential(pot, canonicalize_point("white", 0.5, 0.5)), 0.3)
        self.assertAlmostEqual(eval_potential(pot, canonicalize_point("black", 0.5, 0.5)), -0.3)

    def test_gluing(self):
        pot = Potential.from_mapping({"g1": 1.0, "g2": 2.0, "signed_bump": 3.0})
        t = np.linspace(0.0, 1.0, 11)
        zeros = np.zeros_like(t)
        for x, y in ((t, zeros), (zeros, t), (t, zeros + 1), (zeros + 1, t)):
            np.testing.assert_allclose(pot.evaluate(0, x, y), pot.evaluate(1, x, y), atol=1e-15)
        self.assertTrue(pot.is_continuous)

    def test_discontinuous_needs_flag(self):
        with self.assertRaises(PreconditionError):
            Potential.from_mapping({"signed_const": 1.0})
        pot = Potential.from_mapping({"signed_const": 1.0}, allow_discontinuous=True)
        self.assertFalse(pot.is_continuous)

    def test_unknown(self):
        with self.assertRaises(PreconditionError):
            Potential.from_mapping({"nope": 1.0})

    def test_kappa_range(self):
        with self.assertRaises(PreconditionError):
            Potential.from_mapping({"g2": 1.0}, kappa=1.5)

    def test_constants(self):
        pot = Potential.from_mapping({"signed_bump": 2 * SQRT2})
        self.assertAlmostEqual(pot.lipschitz, 1.0)
        self.assertAlmostEqual(pot.holder_seminorm, 1.0)
        self.assertAlmostEqual(pot.sup_norm, 2 * SQRT2 / 16)
        half = Potential.from_mapping({"g2": 1.0}, kappa=0.5)
        self.assertAlmostEqual(half.holder_seminorm, math.pi * SQRT2**0.5)

    def test_scaled(self):
        pot = Potential.from_mapping({"g2": 0.3})
        self.assertTrue(pot.scaled(0).is_zero)
        self.assertEqual(pot.scaled(2).as_mapping(), {"signed_sin": 0.6})
