import tempfile

from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase

from tilepress import appsettings
from tilepress.cells import EdgeLabel
from tilepress.config import RunConfig
from tilepress.ldp import EnergyRange
from tilepress.tests.utils import write_config


class TestDefaults(SimpleTestCase):
    def test_minimal(self):
        config = RunConfig.from_dict({"map": {"m": 3}})
        self.assertEqual(config.m, 3)
        self.assertEqual(config.subsystem, "full")
        self.assertEqual(config.grid["G"], appsettings.TILEPRESS_GRID_SIZE)
        self.assertEqual(config.levels["n_max"], 4)
        self.assertEqual(config.ldp["alpha_fractions"], [-0.6, 0.6])
        self.assertEqual(config.e0, EdgeLabel.BOTTOM)
        self.assertEqual(config.n_range, [3, 4, 5, 6, 7])
        self.assertEqual(config.output["formats"], ["csv", "json"])
        self.assertTrue(config.potential_object().is_zero)
        self.assertEqual(len(config.t_grid()), 41)

    def test_round_trip(self):
        config = RunConfig.from_dict(
            {
                "map": {"m": 3},
                "subsystem": "carpet",
                "potential": {"coefficients": {"g2": 0.3}, "kappa": 0.5},
                "ldp": {"t_grid": {"start": -2, "stop": 2, "num": 9}, "n_range": [1, 2]},
            }
        )
        self.assertEqual(RunConfig.from_json(config.to_json()), config)

    def test_load(self):
        with tempfile.TemporaryDirectory() as directory:
            path = write_config(directory, {"map": {"m": 2}})
            self.assertEqual(RunConfig.load(path).m, 2)

    def test_with_overrides(self):
        config = RunConfig.from_dict({"map": {"m": 3}})
        self.assertIs(config.with_overrides(), config)
        self.assertEqual(config.with_overrides(n_max=2).levels["n_max"], 2)

    def test_alphas(self):
        config = RunConfig.from_dict({"map": {"m": 3}})
        alphas = config.alphas(EnergyRange(0.0, -1.0, 2.0))
        self.assertEqual(len(alphas), 2)
        self.assertAlmostEqual(alphas[0], -0.6)
        self.assertAlmostEqual(alphas[1], 1.2)


class TestSubsystems(SimpleTestCase):
    def test_triples(self):
        config = RunConfig.from_dict({"map": {"m": 3}, "subsystem": [["W", 0, 0], ["b", 1, 1]]})
        self.assertEqual(config.subsystem, [["black", 1, 1], ["white", 0, 0]])
        self.assertEqual(len(config.subsystem_object().labels), 2)

    def test_outside_map(self):
        with self.assertRaises(ImproperlyConfigured):
            RunConfig.from_dict({"map": {"m": 2}, "subsystem": [["white", 2, 0]]})

    def test_carpet_needs_m3(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "subsystem/potential"):
            RunConfig.from_dict({"map": {"m": 2}, "subsystem": "carpet"})

    def test_unknown_preset(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "subsystem:"):
            RunConfig.from_dict({"map": {"m": 3}, "subsystem": "gasket"})


class TestErrors(SimpleTestCase):
    def test_map_required(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "map: this section is required"):
            RunConfig.from_dict({})

    def test_not_an_object(self):
        with self.assertRaises(ImproperlyConfigured):
            RunConfig.from_dict([1, 2])
        with self.assertRaisesMessage(ImproperlyConfigured, "grid: expected an object"):
            RunConfig.from_dict({"map": {"m": 3}, "grid": 5})

    def test_unknown_section(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "Unknown configuration sections"):
            RunConfig.from_dict({"map": {"m": 3}, "plot": {}})

    def test_unknown_key(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "map.q: unknown key"):
            RunConfig.from_dict({"map": {"m": 3, "q": 1}})

    def test_small_factor(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "map.m:"):
            RunConfig.from_dict({"map": {"m": 1}})

    def test_booleans_are_not_numbers(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "map.m:"):
            RunConfig.from_dict({"map": {"m": True}})
        with self.assertRaisesMessage(ImproperlyConfigured, "potential.coefficients:"):
            RunConfig.from_dict({"map": {"m": 3}, "potential": {"coefficients": {"g2": True}}})

    def test_unknown_basis(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "potential.coefficients:"):
            RunConfig.from_dict({"map": {"m": 3}, "potential": {"coefficients": {"g9": 1}}})

    def test_discontinuous_needs_flag(self):
        data = {"map": {"m": 3}, "potential": {"coefficients": {"signed_const": 1.0}}}
        with self.assertRaises(ImproperlyConfigured):
            RunConfig.from_dict(data)
        data["potential"]["allow_discontinuous"] = True
        self.assertFalse(RunConfig.from_dict(data).potential_object().is_continuous)

    def test_t_grid_order(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "ldp.t_grid:"):
            RunConfig.from_dict({"map": {"m": 3}, "ldp": {"t_grid": {"start": 1, "stop": -1}}})

    def test_n_range_order(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "ldp.n_range:"):
            RunConfig.from_dict({"map": {"m": 3}, "ldp": {"n_range": [5, 2]}})

    def test_bad_edge(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "ldp.e0:"):
            RunConfig.from_dict({"map": {"m": 3}, "ldp": {"e0": "diagonal"}})

    def test_json_errors(self):
        with self.assertRaisesMessage(ImproperlyConfigured, "Invalid JSON at line 2"):
            RunConfig.from_json('{"map": {"m": 3},\n  oops}')
