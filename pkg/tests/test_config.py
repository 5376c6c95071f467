import unittest

from flist.config import (
    ConfigBlock, ConfigSetting, ConfigSpecError, Namespace, ValidationError, float_list,
    format_default, positive, sweep, unit_interval,
)


class TestNamespace(unittest.TestCase):
    def test_empty_str_render(self):
        self.assertEqual(str(Namespace()), "Namespace{}")

    def test_named_empty_str_render(self):
        self.assertEqual(str(Namespace(name="test")), "Namespace[test]{}")

    def test_missing_attribute_error(self):
        with self.assertRaises(AttributeError):
            Namespace().test

    def test_missing_key_error(self):
        with self.assertRaises(KeyError):
            Namespace()["test"]

    def test_merge(self):
        nsa = Namespace(
            alpha=1.0, scatter=Namespace(k_min=0.05, k_max=4.0), evolve=Namespace(dt=0.01)
        )
        nsb = Namespace(
            beta=2.0, scatter=Namespace(k_max=3.0), evolve=Namespace(t_end=5.0)
        )
        nsa.merge(nsb)
        self.assertEqual(nsa.alpha, 1.0)
        self.assertEqual(nsa.beta, 2.0)
        self.assertEqual(nsa.scatter.k_min, 0.05)
        self.assertEqual(nsa.scatter.k_max, 3.0)
        self.assertEqual(nsa.evolve.dt, 0.01)
        self.assertEqual(nsa.evolve.t_end, 5.0)

    def test_from_dict_nests(self):
        ns = Namespace.from_dict({"alpha": 1.5, "evolve": {"dt": 0.01}})
        self.assertIsInstance(ns.evolve, Namespace)
        self.assertEqual(ns.to_dict(), {"alpha": 1.5, "evolve": {"dt": 0.01}})

    def test_copy_is_deep(self):
        ns = Namespace(evolve=Namespace(dt=0.01))
        copied = ns.copy()
        copied.evolve["dt"] = 0.5
        self.assertEqual(ns.evolve.dt, 0.01)
        self.assertNotEqual(ns, copied)


class TestConverters(unittest.TestCase):
    def test_float_list(self):
        self.assertEqual(float_list("-5,5,-0.3,-0.05"), [-5.0, 5.0, -0.3, -0.05])
        self.assertEqual(float_list([1, 2]), [1.0, 2.0])

    def test_geometric_sweep(self):
        times = sweep("50:400:4")
        self.assertEqual(len(times), 4)
        for got, expected in zip(times, [50.0, 100.0, 200.0, 400.0]):
            self.assertAlmostEqual(got, expected, places=10)
        self.assertEqual(sweep("10:20:1"), [10.0])
        self.assertEqual(sweep([5, 7]), [5.0, 7.0])

    def test_validators(self):
        self.assertTrue(positive(1e-12))
        self.assertFalse(positive(0.0))
        self.assertFalse(positive(float("inf")))
        self.assertTrue(unit_interval(1.0))
        self.assertFalse(unit_interval(0.0))

    def test_format_default(self):
        self.assertEqual(format_default(1e-8), "1e-08")
        self.assertEqual(format_default((-20.0, 20.0, 1024)), "-20,20,1024")


class TestConfigSetting(unittest.TestCase):
    def test_choices(self):
        with self.assertRaises(ValidationError):
            ConfigSetting("test", choices=["a", "b"]).validate_value("c")

    def test_conversion_failure(self):
        with self.assertRaises(ValidationError):
            ConfigSetting("dt", convert=float).validate_value("fast")

    def test_validation_failure(self):
        with self.assertRaises(ValidationError):
            ConfigSetting("dt", convert=float, validate=positive).validate_value("-1")

    def test_default_and_required(self):
        self.assertEqual(ConfigSetting("dt", default=0.005).validate_value(), 0.005)
        with self.assertRaises(ValidationError):
            ConfigSetting("path", required=True).validate_value()

    def test_option_spelling(self):
        self.assertEqual(ConfigSetting("t_end").option, "--t-end")


class TestConfigBlock(unittest.TestCase):
    def setUp(self):
        self.block = ConfigBlock("test")
        self.block.add_setting("test_setting")
        self.block.add_block("test_block")

    def test_duplicate_name_use(self):
        with self.assertRaises(ConfigSpecError):
            self.block.add_setting("test_block")

    def test_duplicate_kind_use(self):
        with self.assertRaises(ConfigSpecError):
            self.block.add_block("test_setting")

    def test_required_with_default(self):
        with self.assertRaises(ConfigSpecError):
            self.block.add_setting("conflict", required=True, default="foo")

    def test_setting_should_be_block(self):
        with self.assertRaises(ValidationError):
            self.block.validate_block(Namespace(test_block=""))

    def test_block_should_be_setting(self):
        with self.assertRaises(ValidationError):
            self.block.validate_block(Namespace(test_setting=Namespace()))

    def test_unknown_key(self):
        with self.assertRaises(ValidationError):
            self.block.validate_block(Namespace(not_real=""))

        with self.assertRaises(ValidationError):
            self.block.validate_block(Namespace(not_real=Namespace()))

    def test_block_validator(self):
        block = ConfigBlock("contour", validate=lambda ns: ns.k_min < ns.k_max)
        block.add_setting("k_min", default=0.05, convert=float)
        block.add_setting("k_max", default=4.0, convert=float)
        self.assertEqual(block.validate_block(Namespace(k_max="2")).k_max, 2.0)
        with self.assertRaises(ValidationError):
            block.validate_block(Namespace(k_min="3", k_max="2"))

    def test_walk_and_defaults(self):
        root = ConfigBlock("root")
        root.add_setting("alpha", default=1.0)
        child = root.add_block("evolve")
        child.add_setting("dt", default=0.005)
        self.assertEqual([path for path, _ in root.walk()], [("alpha",), ("evolve", "dt")])
        self.assertEqual(root.defaults().to_dict(), {"alpha": 1.0, "evolve": {"dt": 0.005}})


class TestDocGen(unittest.TestCase):
    def test_table(self):
        block = ConfigBlock("fl-ist", desc="Run settings.")
        block.add_setting("alpha", "Dispersion coefficient.", default=1.0)
        block.add_setting("policy", "Zero mode.", default="project_out",
                          choices=("project_out", "analytic_limit"))
        child = block.add_block("evolve", "Integrator.")
        child.add_setting("dt", "Time step.", default=0.005)
        expected = (
            "fl-ist\n"
            "Run settings.\n"
            "------ ----------- -----------\n"
            "name   default     description\n"
            "------ ----------- -----------\n"
            "alpha  1           Dispersion coefficient.\n"
            "policy project_out Zero mode. (choices: project_out, analytic_limit)\n"
            "------ ----------- -----------\n"
            "\n"
            "[evolve]\n"
            "Integrator.\n"
            "---- ---------- -----------\n"
            "name default    description\n"
            "---- ---------- -----------\n"
            "dt   0.005      Time step.\n"
            "---- ---------- -----------"
        )
        self.assertEqual(block.generate_docs(), expected)


if __name__ == "__main__":
    unittest.main()
