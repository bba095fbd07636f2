from contextlib import redirect_stderr
import io
import json
import os
import shutil
import tempfile
from unittest import TestCase

from mockito import unstub, verify, when
from parameterized import parameterized as p

from toda_spectra import cli, harness
from toda_spectra.core import exceptions, store
from toda_spectra.harness import ConvergenceReport, make_row


def report_of(failed):
    rows = [
        make_row("spectrum_bulk", 8, 0, 0.25, 0.0),
        make_row("spectrum_bulk", 16, 0, 0.125, 0.0)._replace(slope=-1.0, failed=failed),
    ]
    return ConvergenceReport(rows, {("spectrum_bulk", 0): -1.0})


class TempDirCase(TestCase):
    def setUp(self):
        self.dir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.dir, ignore_errors=True)
        unstub()

    def write(self, name, text):
        path = os.path.join(self.dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path


class TestParseRunConfig(TestCase):
    def test_defaults(self):
        config = cli.parse_run_config("")
        self.assertEqual(config.N_list, (32, 64, 128, 256, 512))
        self.assertEqual(config.output_format, "csv")
        self.assertIsNone(config.output_path)
        self.assertEqual(config.flow, cli.FLOW_DEFAULTS)

    def test_yaml(self):
        config = cli.parse_run_config(
            "profile:\n"
            "  alpha: [[2, 0.5, 0.0]]\n"
            "N_list: [8, 16, 32]\n"
            "K: 6\n"
            "tolerances:\n"
            "  symmetry: 1.0e-6\n"
            "flow:\n"
            "  dt: 0.01\n"
            "output:\n"
            "  format: json\n"
            "  path: out.json\n")
        self.assertEqual(list(config.alpha.cos), [0.0, 0.5])
        self.assertTrue(config.beta.is_zero())
        self.assertEqual(config.N_list, (8, 16, 32))
        self.assertEqual(config.K, 6)
        self.assertEqual(config.tolerances, {"symmetry": 1e-6})
        self.assertEqual(config.flow["dt"], 0.01)
        self.assertEqual(config.flow["t_final"], 10.0)
        self.assertEqual((config.output_format, config.output_path), ("json", "out.json"))

    def test_json(self):
        config = cli.parse_run_config('{"N_list": [8, 16], "eta_freq": 0.25, "profile": {}}')
        self.assertEqual(config.N_list, (8, 16))
        self.assertEqual(config.eta_freq, 0.25)
        self.assertTrue(config.alpha.is_zero())
        self.assertTrue(config.beta.is_zero())

    @p.expand([
        ("N_list: [8, 16]\nbogus: 1\n", "bogus", 2, 1),
        ("tolerances:\n  foo: 1.0\n", "tolerances.foo", 2, 3),
        ("output:\n  format: xml\n", "output.format", 2, 3),
        ("K: many\n", "K", 1, 1),
        ("N_list: [8, 16.5]\n", "N_list", 1, 1),
        ("N_list: []\n", "N_list", 1, 1),
        ("profile:\n  alpha: [[0, 1.0, 0.0]]\n", "profile.alpha", 2, 3),
    ])
    def test_errors_point_at_the_key(self, text, key, line, column):
        with self.assertRaises(exceptions.ConfigError) as cm:
            cli.parse_run_config(text)
        self.assertEqual(cm.exception.key, key)
        self.assertEqual((cm.exception.line, cm.exception.column), (line, column))
        self.assertIn("line {}".format(line), str(cm.exception))

    def test_syntax_error(self):
        with self.assertRaises(exceptions.ConfigError) as cm:
            cli.parse_run_config("N_list: [8, 16\n")
        self.assertIsNotNone(cm.exception.line)

    def test_not_an_object(self):
        with self.assertRaises(exceptions.ConfigError):
            cli.parse_run_config("- 8\n- 16\n")


class TestLoadRunConfig(TempDirCase):
    def test_missing_file(self):
        with self.assertRaises(exceptions.ConfigError):
            cli.load_run_config(os.path.join(self.dir, "absent.yaml"))

    def test_reads_the_file(self):
        path = self.write("run.yaml", "N_list: [6, 8, 10]\n")
        self.assertEqual(cli.load_run_config(path).N_list, (6, 8, 10))

    def test_no_path_gives_defaults(self):
        self.assertEqual(cli.load_run_config(None), cli.default_run_config())


class TestRender(TestCase):
    def test_csv(self):
        lines = cli.render(report_of(failed=False)).splitlines()
        self.assertEqual(lines[0], ",".join(cli.HEADER))
        self.assertEqual(lines[1], "spectrum_bulk,8,0,0.25,0,0.25,0.25,")
        self.assertEqual(lines[2], "spectrum_bulk,16,0,0.125,0,0.125,0.125,-1")

    def test_csv_keeps_full_precision(self):
        report = ConvergenceReport([make_row("x", 8, 1, 0.1, 0.0)], {})
        self.assertEqual(cli.render(report).splitlines()[1].split(",")[3], "0.10000000000000001")

    def test_csv_status_column_only_when_failed(self):
        lines = cli.render(report_of(failed=True)).splitlines()
        self.assertEqual(lines[0], ",".join(cli.HEADER + ("status",)))
        self.assertTrue(lines[1].endswith(","))
        self.assertTrue(lines[2].endswith(",FAIL"))

    def test_json(self):
        payload = json.loads(cli.render(report_of(failed=True), "json"))
        self.assertEqual([row["status"] for row in payload["rows"]], ["ok", "FAIL"])
        self.assertIsNone(payload["rows"][0]["slope"])
        self.assertEqual(payload["slopes"], [{"check": "spectrum_bulk", "n": 0, "slope": -1.0}])


class TestEmit(TempDirCase):
    def test_writes_lf_only(self):
        path = os.path.join(self.dir, "report.csv")
        cli.emit(report_of(failed=False), "csv", path)
        with open(path, "rb") as f:
            data = f.read()
        self.assertNotIn(b"\r", data)
        self.assertEqual(data.count(b"\n"), 3)

    def test_unwritable_path(self):
        path = os.path.join(self.dir, "missing", "report.csv")
        with self.assertRaises(exceptions.ReportWriteError) as cm:
            cli.emit(report_of(failed=False), "csv", path)
        self.assertEqual(cm.exception.path, path)

    def test_unknown_format(self):
        with self.assertRaises(exceptions.ConfigError):
            cli.emit(report_of(failed=False), "xml")


class TestRun(TempDirCase):
    def setUp(self):
        super().setUp()
        store.clear()
        self.out = os.path.join(self.dir, "out.csv")

    def run_cli(self, *argv):
        with redirect_stderr(io.StringIO()):
            return cli.run(list(argv))

    @p.expand([(True, cli.EXIT_CHECK_FAILED), (False, cli.EXIT_OK)])
    def test_verify_exit_code(self, failed, code):
        when(harness).verify(Ellipsis).thenReturn(report_of(failed))
        self.assertEqual(self.run_cli("verify", "spectrum", "--out", self.out), code)
        verify(harness, times=1).verify(Ellipsis)
        self.assertTrue(os.path.exists(self.out))

    def test_verify_receives_the_flags(self):
        seen = []

        def answer(config, target):
            seen.append((config, target))
            return report_of(False)

        when(harness).verify(Ellipsis).thenAnswer(answer)
        self.run_cli("verify", "--N", "24", "--tol", "1e-9", "--out", self.out)
        config, target = seen[0]
        self.assertEqual(target, "all")
        self.assertEqual(config.N_list, (24,))
        self.assertEqual(config.settings["quad_tol"], 1e-9)

    @p.expand([
        (exceptions.NoConvergence("stuck", n=3),),
        (exceptions.StepRejected("a_2 left the positive range", n=2),),
    ])
    def test_solver_errors_are_not_check_failures(self, error):
        when(harness).verify(Ellipsis).thenRaise(error)
        self.assertEqual(self.run_cli("verify", "--out", self.out), cli.EXIT_SOLVER_ERROR)
        self.assertFalse(os.path.exists(self.out))

    def test_unwritable_output_path(self):
        path = self.write("run.yaml", "profile: {}\nN_list: [4]\n")
        out = os.path.join(self.dir, "missing", "out.csv")
        self.assertEqual(
            self.run_cli("spectrum", "--config", path, "--out", out), cli.EXIT_INPUT_ERROR)
        self.assertFalse(os.path.exists(out))

    @p.expand([
        (("frobnicate",),),
        (("spectrum", "zeros"),),
        (("verify", "--tol", "-1"),),
        (("verify", "--N", "two"),),
    ])
    def test_input_errors(self, argv):
        self.assertEqual(self.run_cli(*argv), cli.EXIT_INPUT_ERROR)

    def test_bad_config(self):
        path = self.write("run.yaml", "N_list: [8, 8]\n")
        self.assertEqual(self.run_cli("verify", "--config", path), cli.EXIT_INPUT_ERROR)
        path = self.write("typo.yaml", "N_lsit: [8]\n")
        self.assertEqual(self.run_cli("spectrum", "--config", path), cli.EXIT_INPUT_ERROR)

    def test_spectrum_of_the_equilibrium_chain(self):
        path = self.write("run.yaml", "profile: {}\nN_list: [6]\n")
        self.assertEqual(self.run_cli("spectrum", "--config", path, "--out", self.out), cli.EXIT_OK)
        with open(self.out, encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertEqual(len(lines), 13)
        self.assertEqual(lines[0], ",".join(cli.HEADER))
        for line in lines[1:]:
            self.assertLess(float(line.split(",")[5]), 1e-10)

    def test_json_output_flag(self):
        path = self.write("run.yaml", "profile: {}\nN_list: [4]\n")
        out = os.path.join(self.dir, "out.json")
        self.run_cli("toda-freqs", "--config", path, "--format", "json", "--out", out)
        with open(out, encoding="utf-8") as f:
            rows = json.load(f)["rows"]
        self.assertEqual(len(rows), 6)
        self.assertEqual({row["check"] for row in rows}, {"omega", "omega_b5"})
