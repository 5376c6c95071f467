import contextlib
import io
import json
from pathlib import Path
import shutil
import tempfile
import unittest

import numpy as np

from flist.cli import build_parser, run
from flist.grid import SampledPotential, make_grid
from flist.io import read_ensemble_json, read_field_csv, read_scattering_json, write_field_csv
from flist.loader import build_loader


def call(*argv):
    """Run the command line, returning (status, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        status = run([str(arg) for arg in argv])
    return status, out.getvalue(), err.getvalue()


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.root = Path(tempfile.mkdtemp())
        grid = make_grid(-8, 8, 161)
        self.field = self.root / "u.csv"
        write_field_csv(self.field, SampledPotential.from_function(
            grid, lambda x: 0.3 * (1 + 0.2j * x) * np.exp(-x**2)
        ), {"command": "test"})

    def tearDown(self):
        shutil.rmtree(self.root)


class TestExitCodes(CliTestCase):
    def test_trivial_suite_passes(self):
        status, out, _ = call("verify", "--suite", "trivial", "-q")
        self.assertEqual(status, 0)
        records = json.loads(out)
        self.assertTrue(records)
        self.assertTrue(all(record["passed"] for record in records))

    def test_non_decaying_input(self):
        path = self.root / "flat.csv"
        write_field_csv(path, SampledPotential(make_grid(-5, 5, 101), np.ones(101)), {})
        status, _, err = call("scatter", "--in", path, "--out", self.root / "sd.json", "-q")
        self.assertEqual(status, 2)
        self.assertIn("DecayError", err)

    def test_cone_below_minus_alpha(self):
        sd = self.root / "sd.json"
        status, _, _ = call("scatter", "--in", self.field, "--out", sd,
                            "--k-max", "2", "--n-nodes", "5", "-q")
        self.assertEqual(status, 0)
        status, _, err = call("asymptote", "--scattering", sd, "--out", self.root / "rates.csv",
                              "--cone=-1,1,-1.5,-0.5", "-q")
        self.assertEqual(status, 2)
        self.assertIn("DegenerateCone", err)
        self.assertFalse((self.root / "rates.csv").exists())

    def test_config_errors(self):
        status, _, err = call("evolve", "--in", self.field, "--out", self.root / "run",
                              "--dt=-1", "-q")
        self.assertEqual(status, 1)
        self.assertIn("ValidationError", err)
        status, _, _ = call("evolve", "--in", self.root / "missing.csv", "--out", self.root / "run")
        self.assertEqual(status, 1)
        status, _, _ = call("verify", "--config", self.root / "missing.json")
        self.assertEqual(status, 1)
        status, _, _ = call("unfold")
        self.assertEqual(status, 1)

    def test_malformed_input(self):
        path = self.root / "bad.csv"
        path.write_text("x,re_u,im_u\n")
        status, _, err = call("scatter", "--in", path, "--out", self.root / "sd.json", "-q")
        self.assertEqual(status, 1)
        self.assertIn("FormatError", err)


class TestCommands(CliTestCase):
    def test_scatter_then_spectrum(self):
        sd_path, ens_path = self.root / "sd.json", self.root / "ens.json"
        status, _, _ = call("scatter", "--in", self.field, "--out", sd_path,
                            "--k-max", "2", "--n-nodes", "6", "-q")
        self.assertEqual(status, 0)
        sd = read_scattering_json(sd_path)
        self.assertEqual(len(sd.nodes), 24)
        header = json.loads(sd_path.read_text())["provenance"]
        self.assertEqual(header["command"], "scatter")
        self.assertEqual(header["parameters"]["scatter"]["k_max"], 2.0)
        self.assertIn(str(self.field), header["inputs"])

        status, _, _ = call("spectrum", "--scattering", sd_path, "--out", ens_path,
                            "--search-box=0.1,1.5,0.1,1.5", "-q")
        self.assertEqual(status, 0)
        self.assertEqual(len(read_ensemble_json(ens_path)), 0)

    def test_nsoliton_is_deterministic(self):
        ens_path = self.root / "ens.json"
        ens_path.write_text(json.dumps({"poles": [
            {"re_k": 0.7071067811865476, "im_k": 0.7071067811865476, "re_c": 1.0, "im_c": 0.0},
        ]}))
        outputs = []
        for name in ("a.csv", "b.csv"):
            status, _, _ = call("nsoliton", "--ensemble", ens_path, "--out", self.root / name,
                                "--grid=-6,6,121", "--t", "0.5", "-q")
            self.assertEqual(status, 0)
            outputs.append((self.root / name).read_text().splitlines())
        self.assertEqual(outputs[0][1:], outputs[1][1:])
        field, header = read_field_csv(self.root / "a.csv")
        self.assertEqual(field.grid.n_points, 121)
        self.assertEqual(header["parameters"]["rhp"]["t"], 0.5)
        self.assertGreater(np.max(np.abs(field.values)), 0.1)

    def test_soliton_pipeline(self):
        planted, field = self.root / "planted.json", self.root / "soliton.csv"
        sd_path, ens_path = self.root / "sd.json", self.root / "ens.json"
        rates = self.root / "rates.csv"
        planted.write_text(json.dumps({"poles": [
            {"re_k": 0.7071067811865476, "im_k": 0.7071067811865476, "re_c": 1.0, "im_c": 0.0},
        ]}))
        status, _, _ = call("nsoliton", "--ensemble", planted, "--out", field,
                            "--grid=-12,12,2401", "-q")
        self.assertEqual(status, 0)
        status, _, _ = call("scatter", "--in", field, "--out", sd_path,
                            "--k-max", "2.5", "--n-nodes", "8", "-q")
        self.assertEqual(status, 0)
        status, _, _ = call("spectrum", "--scattering", sd_path, "--out", ens_path,
                            "--search-box=0.2,1.5,0.2,1.5", "-q")
        self.assertEqual(status, 0)
        found = read_ensemble_json(ens_path)
        self.assertEqual(len(found), 1)
        self.assertLess(abs(found.k[0] - np.exp(1j * np.pi / 4)), 1e-4)
        self.assertLess(abs(found.c[0] - 1.0), 1e-3)

        status, _, _ = call("asymptote", "--scattering", sd_path, "--ensemble", ens_path,
                            "--out", rates, "--cone=-0.1,0.1,-0.3,-0.05",
                            "--t-sweep", "0.5:1:2", "-q")
        self.assertEqual(status, 0)
        lines = rates.read_text().splitlines()
        self.assertEqual(lines[1], "t,residual_sup,bound,slope_running")
        self.assertEqual([float(line.split(",")[0]) for line in lines[2:]], [0.5, 1.0])

    def test_evolve_run_dir(self):
        config = self.root / "run.json"
        config.write_text(json.dumps({"evolve": {"t_end": 0.02, "snap": "every:0.01"}}))
        status, _, _ = call("evolve", "--in", self.field, "--out", self.root / "run",
                            "--config", config, "-q")
        self.assertEqual(status, 0)
        manifest = json.loads((self.root / "run" / "manifest.json").read_text())
        self.assertEqual(len(manifest["snapshots"]), 3)
        self.assertEqual(manifest["provenance"]["parameters"]["evolve"]["t_end"], 0.02)

    def test_report_file(self):
        path = self.root / "report.json"
        status, out, _ = call("verify", "--suite", "pc", "--seed", "7", "--out", path, "-q")
        self.assertEqual(status, 0)
        self.assertEqual(out, "")
        header, body = path.read_text().split("\n", 1)
        self.assertEqual(json.loads(header[2:])["parameters"]["seed"], 7)
        self.assertTrue(all(record["suite"] == "pc" for record in json.loads(body)))


class TestHelp(unittest.TestCase):
    def test_epilog_lists_defaults(self):
        parser = build_parser(build_loader())
        text = parser.format_help()
        self.assertIn("decay_tol", text)
        self.assertIn("1e-08", text)
        self.assertIn("[evolve]", text)

    def test_every_setting_is_an_option(self):
        loader = build_loader()
        parser = build_parser(loader)
        args = parser.parse_args(["verify", "--t-sweep", "50:400:8", "--zero-mode-policy",
                                  "analytic_limit"])
        self.assertEqual(args.setting_t_sweep, "50:400:8")
        self.assertEqual(args.command, "verify")


if __name__ == "__main__":
    unittest.main()
