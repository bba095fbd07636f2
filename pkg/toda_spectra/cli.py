"""Batch front end: `toda-spectra <command> [--config PATH] ...`."""
import argparse
from collections import namedtuple
import csv
import io
import json
import math
import sys

import numpy as np
import yaml

from . import harness
from .abelian_differentials import frequencies_via_B5
from .common import util
from .core import exceptions
from .core.settings import ACCEPTANCE_DEFAULTS, DEFAULTS, SettingsMixin
from .core.utils import eat_but_log_errors
from .hill_kdv import hkdv_reference
from .toda_model import FourierProfile, evolve_lax, lax_matrices


__all__ = (
    "RunConfig",
    "COMMANDS",
    "load_run_config",
    "emit",
    "run",
    "main",
)

MYPY = False
if MYPY:
    from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple
    RunConfig = NamedTuple("RunConfig", [
        ("alpha", FourierProfile),
        ("beta", FourierProfile),
        ("N_list", Tuple[int, ...]),
        ("eta_freq", float),
        ("eta_action", float),
        ("K", int),
        ("K_sigma", int),
        ("n_max", int),
        ("tolerances", Dict[str, float]),
        ("settings", Dict[str, Any]),
        ("flow", Dict[str, Any]),
        ("output_path", Optional[str]),
        ("output_format", str),
    ])

if not MYPY:
    RunConfig = namedtuple(
        "RunConfig",
        "alpha beta N_list eta_freq eta_action K K_sigma n_max tolerances settings flow "
        "output_path output_format")


EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_ERROR = 3

HEADER = ("check", "N", "n", "computed", "reference", "abs_err", "rel_err", "slope")
FORMATS = ("csv", "json")
TOP_LEVEL_KEYS = (
    "profile", "N_list", "eta_freq", "eta_action", "K", "K_sigma", "n_max",
    "tolerances", "settings", "flow", "output",
)
FLOW_DEFAULTS = {"t_final": 10.0, "dt": 1e-3, "sample_every": None}


def default_run_config():
    # type: () -> RunConfig
    return RunConfig(
        harness.STANDARD_ALPHA, harness.STANDARD_BETA, (32, 64, 128, 256, 512),
        1.0 / 3.0, 0.45, DEFAULTS["K"], DEFAULTS["K_sigma"], DEFAULTS["n_max"],
        {}, {}, dict(FLOW_DEFAULTS), None, "csv")


def _key_marks(text):
    # type: (str) -> Dict[str, Tuple[int, int]]
    """1-based (line, column) of every mapping key, by dotted path."""
    marks = {}  # type: Dict[str, Tuple[int, int]]

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = prefix + str(key.value)
                marks[path] = (key.start_mark.line + 1, key.start_mark.column + 1)
                walk(value, path + ".")

    try:
        walk(yaml.compose(text), "")
    except yaml.YAMLError:
        pass
    return marks


class _Validator:
    def __init__(self, text):
        self.marks = _key_marks(text)

    def error(self, message, key):
        line, column = self.marks.get(key, (None, None))
        return exceptions.ConfigError(message, key=key, line=line, column=column)

    def mapping(self, value, key, allowed):
        # type: (Any, str, Sequence[str]) -> Dict[str, Any]
        if value is None:
            return {}
        if not isinstance(value, dict):
            raise self.error("'{}' must be an object".format(key), key)
        for name in value:
            if name not in allowed:
                raise self.error("unknown key '{}'".format(name), "{}.{}".format(key, name))
        return value

    def number(self, value, key, kind=float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error("'{}' must be a number".format(key), key)
        if kind is int and int(value) != value:
            raise self.error("'{}' must be an integer".format(key), key)
        return kind(value)

    def profile(self, value, key):
        if value is None:
            return None
        if not isinstance(value, list):
            raise self.error("'{}' must be a list of [k, cos, sin] entries".format(key), key)
        try:
            return FourierProfile.from_triples(value, period=1.0)
        except (TypeError, ValueError) as e:
            raise self.error("'{}': {}".format(key, e), key)


def parse_run_config(text, source="<config>"):
    # type: (str, str) -> RunConfig
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise exceptions.ConfigError(
            "cannot parse {}: {}".format(source, getattr(e, "problem", e)),
            line=mark.line + 1 if mark else None,
            column=mark.column + 1 if mark else None,
        )
    check = _Validator(text)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise exceptions.ConfigError("{} must hold an object".format(source))
    for name in data:
        if name not in TOP_LEVEL_KEYS:
            raise check.error("unknown key '{}'".format(name), name)

    config = default_run_config()
    updates = {}  # type: Dict[str, Any]
    profile = check.mapping(data.get("profile"), "profile", ("alpha", "beta"))
    if "profile" in data:
        updates["alpha"] = check.profile(profile.get("alpha"), "profile.alpha") or FourierProfile.zero()
        updates["beta"] = check.profile(profile.get("beta"), "profile.beta") or FourierProfile.zero()
    if "N_list" in data:
        values = data["N_list"]
        if not isinstance(values, list) or not values:
            raise check.error("'N_list' must be a non-empty list", "N_list")
        updates["N_list"] = tuple(check.number(N, "N_list", int) for N in values)
    for name in ("eta_freq", "eta_action"):
        if name in data:
            updates[name] = check.number(data[name], name)
    for name in ("K", "K_sigma", "n_max"):
        if name in data:
            updates[name] = check.number(data[name], name, int)

    tolerances = check.mapping(data.get("tolerances"), "tolerances", tuple(ACCEPTANCE_DEFAULTS))
    updates["tolerances"] = {
        name: check.number(value, "tolerances." + name) for name, value in tolerances.items()}
    updates["settings"] = dict(check.mapping(data.get("settings"), "settings", tuple(DEFAULTS)))
    flow = check.mapping(data.get("flow"), "flow", tuple(FLOW_DEFAULTS))
    merged_flow = dict(FLOW_DEFAULTS)
    for name, value in flow.items():
        merged_flow[name] = None if value is None else check.number(
            value, "flow." + name, int if name == "sample_every" else float)
    updates["flow"] = merged_flow

    output = check.mapping(data.get("output"), "output", ("path", "format"))
    if output.get("path") is not None:
        updates["output_path"] = str(output["path"])
    if "format" in output:
        if output["format"] not in FORMATS:
            raise check.error("'output.format' must be csv or json", "output.format")
        updates["output_format"] = output["format"]
    return config._replace(**updates)


def load_run_config(path):
    # type: (Optional[str]) -> RunConfig
    if path is None:
        return default_run_config()
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise exceptions.ConfigError("cannot read {}: {}".format(path, e.strerror or e))
    return parse_run_config(text, path)


def _number(value):
    # type: (Optional[float]) -> str
    if value is None:
        return ""
    return format(float(value), ".17g")


def render(report, fmt="csv"):
    # type: (harness.ConvergenceReport, str) -> str
    if fmt == "json":
        payload = {
            "rows": [
                {
                    "check": row.check, "N": row.N, "n": row.n,
                    "computed": row.computed, "reference": row.reference,
                    "abs_err": row.abs_err, "rel_err": row.rel_err,
                    "slope": row.slope, "status": "FAIL" if row.failed else "ok",
                }
                for row in report.rows
            ],
            "slopes": [
                {"check": check, "n": n, "slope": slope}
                for (check, n), slope in sorted(report.slopes.items())
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    flagged = report.failed
    writer.writerow(HEADER + (("status",) if flagged else ()))
    for row in report.rows:
        line = [
            row.check, row.N, row.n, _number(row.computed), _number(row.reference),
            _number(row.abs_err), _number(row.rel_err), _number(row.slope),
        ]
        if flagged:
            line.append("FAIL" if row.failed else "")
        writer.writerow(line)
    return buffer.getvalue()


def emit(report, fmt="csv", path=None):
    # type: (harness.ConvergenceReport, str, Optional[str]) -> None
    """Write the report as UTF-8 with LF line endings, to stdout without a path."""
    if fmt not in FORMATS:
        raise exceptions.ConfigError("unknown output format {!r}".format(fmt), key="format")
    text = render(report, fmt)
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as e:
        raise exceptions.ReportWriteError(e.strerror or str(e), path=path)


class RunCommand(SettingsMixin):
    """One subcommand.  `run()` returns the report to emit."""

    name = ""
    verifies = False

    def __init__(self, config, target=None):
        # type: (RunConfig, Optional[str]) -> None
        self.config = config
        self.target = target

    def settings_overrides(self):
        # type: () -> Dict[str, Any]
        return self.config.settings

    def sweep_config(self):
        # type: () -> harness.SweepConfig
        c = self.config
        return harness.SweepConfig(
            c.alpha, c.beta, c.N_list, c.eta_freq, c.eta_action, c.K, c.K_sigma, c.n_max,
            c.tolerances, self.spectra_settings)

    def run(self):
        # type: () -> harness.ConvergenceReport
        raise NotImplementedError


class SpectrumCommand(RunCommand):
    """λ_0..λ_{2N−1}; the reference column holds the equilibrium values."""
    name = "spectrum"

    def run(self):
        config = self.sweep_config()
        rows = []
        for N in config.N_list:
            lam = harness._spectrum(config, N).lam
            reference = harness._equilibrium_eigenvalues(N)
            rows += [harness.make_row("lambda", N, j, lam[j], reference[j]) for j in range(2 * N)]
        return harness.ConvergenceReport(rows, {})


class TodaActionsCommand(RunCommand):
    name = "toda-actions"

    def run(self):
        config = self.sweep_config()
        rows = []
        for N in config.N_list:
            actions = harness._actions(config, N)
            rows += [harness.make_row("I", N, n, actions.I[n - 1], 0.0) for n in range(1, N)]
            rows += [harness.make_row("J", N, n, actions.J[n - 1], 0.0) for n in range(1, N)]
        return harness.ConvergenceReport(rows, {})


class TodaFrequenciesCommand(RunCommand):
    """ω_n from the leading coefficients, and from the band-integral system
    against them."""
    name = "toda-freqs"

    def run(self):
        config = self.sweep_config()
        rows = []
        for N in config.N_list:
            omega = harness._basis(config, N).freq
            b5 = frequencies_via_B5(
                harness._state(config, N), harness._spectrum(config, N),
                harness._basis(config, N), harness._actions(config, N), config.settings)
            n = np.arange(1, N)
            reference = 2.0 * np.sin(n * np.pi / N)
            rows += [harness.make_row("omega", N, k, omega[k - 1], reference[k - 1]) for k in n]
            rows += [harness.make_row("omega_b5", N, k, b5[k - 1], omega[k - 1]) for k in n]
        return harness.ConvergenceReport(rows, {})


class HillCommand(RunCommand):
    """Periodic eigenvalues of q_∓ against the zero-potential values 4π²⌈n/2⌉²."""
    name = "hill"

    def run(self):
        config = self.sweep_config()
        rows = []
        for side, label in (("left", "minus"), ("right", "plus")):
            hs = harness._hill(config, side)
            for n, value in enumerate(hs.lam):
                free = (2.0 * math.pi * math.ceil(n / 2.0)) ** 2
                rows.append(harness.make_row("hill_lambda_" + label, 0, n, value, free))
        return harness.ConvergenceReport(rows, {})


class KdvCommand(RunCommand):
    """KdV actions and frequencies of q_∓, and the ℋ^N_KdV frequencies they predict."""
    name = "kdv"

    def run(self):
        config = self.sweep_config()
        rows = []
        for side, label in (("left", "minus"), ("right", "plus")):
            hs = harness._hill(config, side)
            actions = harness._hill_actions(config, side)
            omega = harness._hill_frequencies(config, side)
            rows += [harness.make_row("kdv_action_" + label, 0, n, actions[n - 1], 0.0)
                     for n in range(1, hs.K + 1)]
            rows += [harness.make_row("kdv_frequency_" + label, 0, n, value, (4.0 * n * math.pi) ** 3)
                     for n, value in enumerate(omega, 1)]
            for N in config.N_list:
                rows += [harness.make_row(
                    "hkdv_frequency_" + label, N, n, hkdv_reference(N, n, value), 2.0 * math.pi * n / N)
                    for n, value in enumerate(omega, 1)]
        return harness.ConvergenceReport(rows, {})


class FlowCommand(RunCommand):
    """Eigenvalue drift of L along the Lax flow."""
    name = "flow"

    def run(self):
        config = self.sweep_config()
        flow = self.config.flow
        rows = []
        for N in config.N_list:
            state = harness._state(config, N)
            initial = np.linalg.eigvalsh(lax_matrices(state).L)
            samples = evolve_lax(state, flow["t_final"], flow["dt"], flow["sample_every"])
            for index, sample in enumerate(samples):
                drift = np.max(np.abs(np.linalg.eigvalsh(lax_matrices(sample.state).L) - initial))
                rows.append(harness.make_row("flow_drift", N, index, drift, 0.0))
        return harness.ConvergenceReport(rows, {})


class VerifyCommand(RunCommand):
    name = "verify"
    verifies = True

    def run(self):
        return harness.verify(self.sweep_config(), self.target or "all")


COMMANDS = {
    command.name: command
    for command in (
        SpectrumCommand, TodaActionsCommand, TodaFrequenciesCommand,
        HillCommand, KdvCommand, FlowCommand, VerifyCommand,
    )
}


def _parser():
    # type: () -> argparse.ArgumentParser
    parser = argparse.ArgumentParser(
        prog="toda-spectra",
        description="Spectral data of periodic Toda chains and their Hill/KdV limits.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument(
        "target", nargs="?", choices=harness.TARGETS + ("all",),
        help="what `verify` checks (default: all)")
    parser.add_argument("--config", help="JSON/YAML run configuration")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--format", choices=FORMATS, help="output format")
    parser.add_argument("--N", type=int, help="run a single chain length")
    parser.add_argument("--tol", type=float, help="quadrature tolerance override")
    parser.add_argument("--debug", action="store_true", help="print solver events")
    parser.add_argument("--debug-log", help="write the JSON solver log to this file")
    return parser


def _apply_flags(config, args):
    # type: (RunConfig, argparse.Namespace) -> RunConfig
    updates = {}  # type: Dict[str, Any]
    if args.N is not None:
        updates["N_list"] = (args.N,)
    if args.tol is not None:
        if not args.tol > 0:
            raise exceptions.ConfigError("--tol must be positive", key="tol")
        settings = dict(config.settings)
        settings["quad_tol"] = args.tol
        updates["settings"] = settings
    if args.out is not None:
        updates["output_path"] = args.out
    if args.format is not None:
        updates["output_format"] = args.format
    return config._replace(**updates)


def _write_debug_log(path):
    # type: (str) -> None
    with eat_but_log_errors(OSError):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(util.debug.get_log())


def run(argv=None):
    # type: (Optional[List[str]]) -> int
    """Exit code 0 on success, 1 when a check failed, 2 on input errors
    (an unwritable output path included), 3 when a solver gave up.
    """
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT_ERROR
    if args.target is not None and args.command != "verify":
        util.log.display_panel("only `verify` takes a target")
        return EXIT_INPUT_ERROR
    if args.debug or args.debug_log:
        util.debug.start_logging()
    try:
        config = _apply_flags(load_run_config(args.config), args)
        command = COMMANDS[args.command](config, args.target)
        report = command.run()
        emit(report, config.output_format, config.output_path)
    except (exceptions.ConfigError, exceptions.ReportWriteError, ValueError) as e:
        util.log.display_panel("input error: {}".format(e))
        return EXIT_INPUT_ERROR
    except exceptions.TodaSpectraError as e:
        util.log.display_panel("{}: {}".format(type(e).__name__, e))
        return EXIT_SOLVER_ERROR
    finally:
        if args.debug_log:
            _write_debug_log(args.debug_log)
        util.debug.stop_logging()
    if command.verifies and report.failed:
        failed = sum(1 for row in report.rows if row.failed)
        util.log.display_panel("{} of {} rows failed".format(failed, len(report.rows)))
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))
