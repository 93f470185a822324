from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from tilepress.cells import (
    EdgeLabel,
    TileAddress,
    address_of_box,
    build_tiles,
    check_capacity,
    color_of,
    enumerate_tiles,
    format_word,
    level_counts,
    local_degree_matrix,
    pair_partner,
    pair_table,
    tile_region,
)
from tilepress.exceptions import CapacityError, PreconditionError
from tilepress.pillow import (
    SQRT2,
    Color,
    MapSpec,
    OneTileLabel,
    apply_map,
    canonicalize_point,
    iterate_spec,
)
from tilepress.tests.utils import spec_and_sub

CENTER_CELL = TileAddress((OneTileLabel(Color.WHITE, 1, 1),))


class TestCounts(SimpleTestCase):
    def test_full_map(self):
        spec = MapSpec(3)
        self.assertEqual(level_counts(spec, None, 1), [[5, 4], [4, 5]])
        self.assertEqual(sum(map(sum, level_counts(spec, None, 2))), 162)

    def test_carpet(self):
        spec, carpet = spec_and_sub(3, "carpet")
        self.assertEqual(level_counts(spec, carpet, 1), [[4, 4], [4, 4]])
        self.assertEqual(sum(map(sum, level_counts(spec, carpet, 1))), 16)
        self.assertEqual(sum(map(sum, level_counts(spec, carpet, 3))), 1024)

    def test_block_matches_counts(self):
        spec, carpet = spec_and_sub(3, "carpet")
        for sub in (None, carpet):
            block = build_tiles(spec, sub, 2)
            counts = np.zeros((2, 2), dtype=int)
            np.add.at(counts, (block.position.astype(int), block.color.astype(int)), 1)
            self.assertEqual(counts.tolist(), level_counts(spec, sub, 2))

    def test_boxes_are_distinct(self):
        block = build_tiles(MapSpec(3), None, 2)
        table = block.box_index()
        self.assertEqual(len(block), 162)
        self.assertTrue((table >= 0).all())

    def test_capacity(self):
        spec = MapSpec(3)
        with self.assertRaises(CapacityError) as cm:
            check_capacity(spec, None, 3, capacity=100)
        self.assertEqual(cm.exception.suggested_level, 1)
        self.assertEqual(cm.exception.count, 2 * 9**3)
        with self.assertRaises(CapacityError):
            build_tiles(spec, None, 3, capacity=100)

    def test_enumerate(self):
        spec, carpet = spec_and_sub(3, "carpet")
        addresses = list(enumerate_tiles(spec, carpet, 2))
        self.assertEqual(len(addresses), 128)
        self.assertEqual(len(set(addresses)), 128)
        for address in addresses[:10]:
            address.validate(spec)

    def test_enumerate_matches_block(self):
        spec, carpet = spec_and_sub(3, "carpet")
        for sub, n in ((carpet, 2), (None, 1), (None, 2)):
            block = build_tiles(spec, sub, n, keep_words=True)
            streamed = list(enumerate_tiles(spec, sub, n))
            self.assertEqual(len(streamed), len(block))
            self.assertEqual(set(streamed), {block.address(i) for i in range(len(block))})
            order = spec.labels() if sub is None else sorted(sub.labels)
            firsts = list(dict.fromkeys(address.word[0] for address in streamed))
            self.assertEqual(firsts, list(order))


class TestAddresses(SimpleTestCase):
    def test_format(self):
        self.assertEqual(str(CENTER_CELL), "w1-1")
        word = (OneTileLabel(Color.WHITE, 0, 1), OneTileLabel(Color.BLACK, 2, 0))
        self.assertEqual(format_word(word), "w0-1.b2-0")

    def test_inadmissible(self):
        word = (OneTileLabel(Color.WHITE, 0, 0), OneTileLabel(Color.BLACK, 0, 0))
        with self.assertRaises(PreconditionError):
            TileAddress(word).validate(MapSpec(3))

    def test_region(self):
        region = tile_region(MapSpec(3), CENTER_CELL)
        self.assertEqual(region.face, Color.WHITE)
        self.assertEqual((region.a, region.b, region.side), (Fraction(1, 3),) * 3)
        self.assertFalse(region.touches_equator)

    def test_address_of_box(self):
        spec = MapSpec(3)
        self.assertEqual(address_of_box(spec, Color.WHITE, 1, 1, 1), CENTER_CELL)
        block = build_tiles(spec, None, 2, keep_words=True)
        for index in range(0, len(block), 7):
            address = block.address(index)
            face = Color(int(block.position[index]))
            found = address_of_box(spec, face, int(block.a[index]), int(block.b[index]), 2)
            self.assertEqual(found, address)


class TestLocalDegree(SimpleTestCase):
    def test_grid_vertex(self):
        spec = MapSpec(3)
        p = canonicalize_point("white", Fraction(1, 3), Fraction(1, 3))
        self.assertEqual(local_degree_matrix(spec, None, p, 1).matrix, ((2, 2), (0, 0)))

    def test_interior_point(self):
        spec = MapSpec(3)
        p = canonicalize_point("black", Fraction(1, 6), Fraction(1, 6))
        deg = local_degree_matrix(spec, None, p, 1)
        self.assertEqual(deg.total, 1)
        self.assertEqual(deg.degree(Color.BLACK), 1)

    def test_cocycle(self):
        spec, carpet = spec_and_sub(3, "carpet")
        points = [
            canonicalize_point("white", Fraction(1, 3), Fraction(1, 3)),
            canonicalize_point("black", Fraction(2, 9), Fraction(5, 9)),
            canonicalize_point("white", Fraction(0), Fraction(4, 9)),
        ]
        for sub in (None, carpet):
            for p in points:
                image = apply_map(spec, p)
                whole = local_degree_matrix(spec, sub, p, 2)
                split = local_degree_matrix(spec, sub, p, 1) @ local_degree_matrix(
                    spec, sub, image, 1
                )
                self.assertEqual(whole, split)


class TestPairs(SimpleTestCase):
    def test_partition(self):
        spec = MapSpec(3)
        for n in (1, 2):
            block = build_tiles(spec, None, n)
            for e0 in EdgeLabel:
                black, white = pair_table(block, e0)
                self.assertEqual(len(black), 9**n)
                tiles = np.concatenate([black, white])
                self.assertEqual(len(np.unique(tiles)), 2 * 9**n)
                self.assertTrue((block.color[white] == int(Color.WHITE)).all())

    def test_partner_matches_table(self):
        spec = MapSpec(3)
        block = build_tiles(spec, None, 2, keep_words=True)
        for e0 in EdgeLabel:
            black, white = pair_table(block, e0)
            for b, w in list(zip(black, white))[::5]:
                partner, edge = pair_partner(spec, e0, block.address(b))
                self.assertEqual(partner, block.address(w))
                self.assertEqual(len(edge), 2)

    def test_across_equator(self):
        spec = MapSpec(3)
        black = TileAddress((OneTileLabel(Color.WHITE, 1, 0),))
        white, (start, end) = pair_partner(spec, EdgeLabel.BOTTOM, black)
        self.assertEqual(white, TileAddress((OneTileLabel(Color.BLACK, 1, 0),)))
        self.assertEqual((start.y, end.y), (0, 0))

    def test_partner_needs_black(self):
        with self.assertRaises(PreconditionError):
            pair_partner(MapSpec(3), EdgeLabel.BOTTOM, CENTER_CELL)

    def test_pairs_need_full_map(self):
        spec, carpet = spec_and_sub(3, "carpet")
        with self.assertRaises(PreconditionError):
            pair_table(build_tiles(spec, carpet, 1), EdgeLabel.TOP)


class TestGeometry(SimpleTestCase):
    def test_tiles_nest_in_their_parents(self):
        spec, carpet = spec_and_sub(3, "carpet")
        for sub in (None, carpet):
            block = build_tiles(spec, sub, 3, keep_words=True)
            for index in range(0, len(block), 5):
                address = block.address(index)
                parent = TileAddress(address.word[:-1])
                region = tile_region(spec, address)
                self.assertTrue(tile_region(spec, parent).contains_box(region), address)
                self.assertFalse(region.contains_box(tile_region(spec, parent)))

    def test_region_matches_block(self):
        spec = MapSpec(3)
        block = build_tiles(spec, None, 2, keep_words=True)
        cx, cy = block.centers()
        for index in range(0, len(block), 3):
            region = tile_region(spec, block.address(index))
            self.assertEqual(region.face, Color(int(block.position[index])))
            self.assertEqual(region.a, Fraction(int(block.a[index]), 9))
            self.assertEqual(region.b, Fraction(int(block.b[index]), 9))
            self.assertAlmostEqual(float(region.center.x), cx[index], places=12)
            self.assertAlmostEqual(float(region.center.y), cy[index], places=12)
            self.assertEqual(region.center.face, region.face)
            self.assertAlmostEqual(region.diameter, SQRT2 / 9, places=15)
            self.assertEqual(region.touches_equator, bool(block.touches_equator()[index]))

    def test_corner_region(self):
        spec = MapSpec(2)
        address = TileAddress((OneTileLabel(Color.BLACK, 0, 0), OneTileLabel(Color.BLACK, 1, 1)))
        region = tile_region(spec, address)
        self.assertEqual(region.face, Color.BLACK)
        self.assertEqual((region.a, region.b, region.side), (Fraction(1, 4),) * 3)
        center = canonicalize_point("black", Fraction(3, 8), Fraction(3, 8))
        self.assertEqual(region.center, center)
        self.assertFalse(region.touches_equator)

    def test_color_of(self):
        for label in MapSpec(3).labels():
            color, position = color_of(label)
            self.assertEqual(position, label.home_face)
            self.assertEqual(color == position, (label.i + label.j) % 2 == 0)


class TestIteratePairs(SimpleTestCase):
    def box_pairs(self, block, e0):
        black, white = pair_table(block, e0)
        position, a, b = block.position, block.a, block.b

        def box(index):
            return int(position[index]), int(a[index]), int(b[index])

        return {(box(i), box(j)) for i, j in zip(black, white)}

    def test_pairs_of_the_iterate(self):
        spec = MapSpec(2)
        square = iterate_spec(spec, 2)
        for k in (1, 2):
            for e0 in EdgeLabel:
                self.assertEqual(
                    self.box_pairs(build_tiles(square, None, k), e0),
                    self.box_pairs(build_tiles(spec, None, 2 * k), e0),
                )
