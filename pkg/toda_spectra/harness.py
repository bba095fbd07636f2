"""N-sweeps comparing Toda spectral data against their Hill/KdV limits."""
from collections import namedtuple
import math

import numpy as np

from .abelian_differentials import frequencies_via_B5, period_matrix, phi_values, phi_zeros, psi_basis
from .common import util
from .core import exceptions, store
from .core.fns import flatten, group_by
from .core.runtime import parallel_map
from .core.settings import ACCEPTANCE_DEFAULTS, SpectraSettings
from .core.utils import timer
from .hill_kdv import (
    hill_discriminant,
    hill_eigenvalues,
    hkdv_reference,
    kdv_actions,
    kdv_frequencies,
    kdv_j_quotients,
    kdv_psi,
)
from .jacobi_spectral import discriminant, eigenvalues_Q
from .toda_actions import actions_arcosh, actions_moment
from .toda_model import FourierProfile, discretize, potentials, reflect


__all__ = (
    "STANDARD_ALPHA",
    "STANDARD_BETA",
    "SweepConfig",
    "ReportRow",
    "ConvergenceReport",
    "TARGETS",
    "edge_widths",
    "verify",
    "verify_spectrum",
    "verify_discriminant",
    "verify_actions",
    "verify_frequencies",
    "verify_symmetry",
    "verify_zeros",
    "fit_rate",
    "evaluate_acceptance",
    "row_count",
)

MYPY = False
if MYPY:
    from typing import Callable, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple
    from .toda_model import TodaState
    ReportRow = NamedTuple("ReportRow", [
        ("check", str),
        ("N", int),
        ("n", int),           # 0 for sup/aggregate rows
        ("computed", float),
        ("reference", float),
        ("abs_err", float),
        ("rel_err", float),
        ("slope", Optional[float]),
        ("failed", bool),
    ])
    Slopes = Dict[Tuple[str, int], float]
else:
    ReportRow = namedtuple(
        "ReportRow", "check N n computed reference abs_err rel_err slope failed")


STANDARD_ALPHA = FourierProfile(cos=[1.0])
STANDARD_BETA = FourierProfile(sin=[1.0])

TARGETS = ("spectrum", "discriminant", "actions", "frequencies", "zeros", "symmetry")
CROSS_MAX_N = 128
SYMMETRY_MAX_N = 128
DISCRIMINANT_GRID = 65
SYMMETRY_GRID = 41
EQUILIBRIUM_ZEROS = 3


class SweepConfig(namedtuple(
    "SweepConfig", "alpha beta N_list eta_freq eta_action K K_sigma n_max tolerances settings"
)):
    """A profile pair, the N values to sweep and the edge exponents."""
    __slots__ = ()

    def __new__(
        cls,
        alpha=STANDARD_ALPHA,
        beta=STANDARD_BETA,
        N_list=(32, 64, 128, 256, 512),
        eta_freq=1.0 / 3.0,
        eta_action=0.45,
        K=16,
        K_sigma=16,
        n_max=8,
        tolerances=None,
        settings=None,
    ):
        N_list = tuple(int(N) for N in N_list)
        if not N_list:
            raise exceptions.ConfigError("N_list must not be empty", key="N_list")
        if any(N < 3 for N in N_list):
            raise exceptions.ConfigError("every N must be >= 3", key="N_list")
        if any(b <= a for a, b in zip(N_list, N_list[1:])):
            raise exceptions.ConfigError("N_list must be strictly increasing", key="N_list")
        if not 0 < eta_freq <= 1.0 / 3.0 + 1e-12:
            raise exceptions.ConfigError("eta_freq must lie in (0, 1/3]", key="eta_freq")
        if not 0 < eta_action < 0.5:
            raise exceptions.ConfigError("eta_action must lie in (0, 1/2)", key="eta_action")
        for key, value in (("K", K), ("K_sigma", K_sigma), ("n_max", n_max)):
            if int(value) < 1:
                raise exceptions.ConfigError("{} must be >= 1".format(key), key=key)
        merged = dict(ACCEPTANCE_DEFAULTS)
        merged.update(tolerances or {})
        if settings is None:
            settings = SpectraSettings()
        return super().__new__(
            cls, alpha, beta, N_list, float(eta_freq), float(eta_action),
            int(K), int(K_sigma), int(n_max), merged, settings)

    @property
    def equilibrium(self):
        # type: () -> bool
        return self.alpha.is_zero() and self.beta.is_zero()

    def key(self, *parts):
        return (
            self.alpha, self.beta, self.settings.fingerprint(), self.N_list[-1],
            self.eta_freq, self.eta_action, self.K, self.K_sigma, self.n_max,
        ) + parts


class ConvergenceReport(namedtuple("ConvergenceReport", "rows slopes")):
    __slots__ = ()

    @property
    def failed(self):
        # type: () -> bool
        return any(row.failed for row in self.rows)

    def extend(self, other):
        # type: (ConvergenceReport) -> ConvergenceReport
        slopes = dict(self.slopes)
        slopes.update(other.slopes)
        return ConvergenceReport(self.rows + other.rows, slopes)


def edge_widths(N, eta):
    # type: (int, float) -> Tuple[int, int]
    """M = ⌊N^η⌋ and L = ⌊M^η⌋."""
    M = max(1, int(math.floor(N ** eta + 1e-12)))
    L = max(1, int(math.floor(M ** eta + 1e-12)))
    return M, L


def make_row(check, N, n, computed, reference):
    # type: (str, int, int, float, float) -> ReportRow
    computed, reference = float(computed), float(reference)
    abs_err = abs(computed - reference)
    rel_err = abs_err / abs(reference) if reference != 0 else abs_err
    return ReportRow(check, int(N), int(n), computed, reference, abs_err, rel_err, None, False)


def _aggregate(check, N, value):
    # type: (str, int, float) -> ReportRow
    return make_row(check, N, 0, value, 0.0)


# Memoized pipeline pieces.  Keys carry the profile pair and the settings.

def _state(config, N):
    # type: (SweepConfig, int) -> TodaState
    return store.cached(config.key("state", N), lambda: discretize(config.alpha, config.beta, N))


def _spectrum(config, N):
    return store.cached(
        config.key("spectrum", N), lambda: eigenvalues_Q(_state(config, N), config.settings))


def _basis(config, N):
    def compute():
        pm = period_matrix(_state(config, N), _spectrum(config, N), config.settings)
        return psi_basis(pm)

    return store.cached(config.key("basis", N), compute)


def _actions(config, N):
    return store.cached(
        config.key("actions", N),
        lambda: actions_arcosh(_state(config, N), _spectrum(config, N), config.settings))


def _hill_K(config):
    # type: (SweepConfig) -> int
    M, _ = edge_widths(config.N_list[-1], config.eta_action)
    return max(config.K, M, 3)


def _hill_settings(config):
    # type: (SweepConfig) -> SpectraSettings
    _, L = edge_widths(config.N_list[-1], max(config.eta_freq, config.eta_action))
    settings = config.settings.copy()
    K = _hill_K(config)
    settings.set("K", K)
    settings.set("K_sigma", min(max(config.K_sigma, L + 1), K))
    settings.set("n_max", min(max(config.n_max, L), K))
    return settings


def _potential(config, side):
    # type: (SweepConfig, str) -> FourierProfile
    q_minus, q_plus = potentials(config.alpha, config.beta)
    return q_minus if side == "left" else q_plus


def _hill(config, side):
    q = _potential(config, side)
    settings = _hill_settings(config)
    return store.cached(
        config.key("hill", side, _hill_K(config)),
        lambda: hill_eigenvalues(q, _hill_K(config), settings))


def _hill_actions(config, side):
    q = _potential(config, side)
    return store.cached(
        config.key("kdv_actions", side),
        lambda: kdv_actions(q, _hill(config, side), _hill_settings(config)))


def _hill_frequencies(config, side):
    q = _potential(config, side)

    def compute():
        return kdv_frequencies(
            q, _hill(config, side), _hill_actions(config, side), _hill_K(config),
            _hill_settings(config))

    return store.cached(config.key("kdv_frequencies", side), compute)


def _sweep(config, per_N):
    # type: (SweepConfig, Callable[[int], List[ReportRow]]) -> ConvergenceReport
    rows = list(flatten(parallel_map(per_N, config.N_list)))
    return _with_slopes(rows)


def _with_slopes(rows):
    # type: (List[ReportRow]) -> ConvergenceReport
    try:
        slopes = fit_rate(rows)
    except exceptions.InsufficientData:
        slopes = {}
    rows = [row._replace(slope=slopes.get((row.check, row.n))) for row in rows]
    return ConvergenceReport(rows, slopes)


def _equilibrium_eigenvalues(N):
    # type: (int) -> np.ndarray
    j = np.arange(2 * N)
    return -2.0 * np.cos(np.ceil(j / 2.0) * np.pi / N)


def verify_spectrum(config):
    # type: (SweepConfig) -> ConvergenceReport
    """4N²(λ_n + 2) against λ^−_n and the mirrored right edge against λ^+_n
    for n ≤ 2M, and the sup distance of the bulk pairs to −2cos(ℓπ/N).
    """
    def per_N(N):
        lam = _spectrum(config, N).lam
        if config.equilibrium:
            reference = _equilibrium_eigenvalues(N)
            return [make_row("spectrum_equilibrium", N, j, lam[j], reference[j])
                    for j in range(2 * N)]

        M, _ = edge_widths(N, config.eta_action)
        left, right = _hill(config, "left").lam, _hill(config, "right").lam
        scale = 4.0 * N * N
        rows = [make_row("spectrum_left", N, n, scale * (lam[n] + 2.0), left[n])
                for n in range(2 * M + 1)]
        rows += [make_row("spectrum_right", N, n, scale * (2.0 - lam[2 * N - 1 - n]), right[n])
                 for n in range(2 * M + 1)]
        bulk = np.arange(M + 1, N - M)
        if len(bulk):
            reference = -2.0 * np.cos(bulk * np.pi / N)
            error = np.maximum(
                np.abs(lam[2 * bulk - 1] - reference), np.abs(lam[2 * bulk] - reference))
            rows.append(_aggregate("spectrum_bulk", N, np.max(error)))
        return rows

    return _sweep(config, per_N)


def _discriminant_grid(config, side):
    hs = _hill(config, side)
    return np.linspace(hs.lam[0] - 1.0, hs.lam[6] + 1.0, DISCRIMINANT_GRID)


def verify_discriminant(config):
    # type: (SweepConfig) -> ConvergenceReport
    """Sup-grid errors of (−1)^N Δ_N(−2 + λ/4N²) − Δ_−(λ), of
    Δ_N(2 − λ/4N²) − Δ_+(λ) and of the matching derivative statements.
    """
    hill_data = {}
    for side in ("left", "right"):
        grid = _discriminant_grid(config, side)
        q = _potential(config, side)
        hill_data[side] = (grid,) + hill_discriminant(q, grid, _hill_settings(config))

    def per_N(N):
        state = _state(config, N)
        scale = 4.0 * N * N
        parity = (-1) ** N
        rows = []
        for side, mirror in (("left", 1.0), ("right", -1.0)):
            grid, delta, delta_dot = hill_data[side]
            value, slope = discriminant(state, mirror * (-2.0 + grid / scale))
            if side == "left":
                value_err = np.abs(parity * value - delta)
                slope_err = np.abs(slope / scale - parity * delta_dot)
            else:
                value_err = np.abs(value - delta)
                slope_err = np.abs(-slope / scale - delta_dot)
            rows.append(_aggregate("discriminant_" + side, N, np.max(value_err)))
            rows.append(_aggregate("discriminant_{}_derivative".format(side), N, np.max(slope_err)))
        return rows

    return _sweep(config, per_N)


def verify_actions(config):
    # type: (SweepConfig) -> ConvergenceReport
    """8N²·I_n against I^−_n, 8N²·I_{N−n} against I^+_n, the J-quotients,
    bulk smallness and the agreement of both action formulas.
    """
    if not config.equilibrium:
        hill = {side: (_hill(config, side), _hill_actions(config, side)) for side in ("left", "right")}

    def per_N(N):
        state, spectrum = _state(config, N), _spectrum(config, N)
        actions = _actions(config, N)
        moment = actions_moment(state, spectrum, config.settings)
        rows = []
        if config.equilibrium:
            rows += [make_row("actions_equilibrium", N, n, actions.I[n - 1], 0.0)
                     for n in range(1, N)]
        else:
            M, L = edge_widths(N, config.eta_action)
            scale = 8.0 * N * N
            for side, index in (("left", lambda n: n - 1), ("right", lambda n: N - n - 1)):
                hs, I = hill[side]
                J = kdv_j_quotients(I, hs)
                rows += [make_row("actions_" + side, N, n, scale * actions.I[index(n)], I[n - 1])
                         for n in range(1, L + 1)]
                rows += [make_row("j_" + side, N, n, actions.J[index(n)], J[n - 1])
                         for n in range(1, L + 1)]
            bulk = np.arange(M + 1, N - M)
            if len(bulk):
                rows.append(_aggregate(
                    "actions_bulk", N, np.max(N * N * bulk * actions.I[bulk - 1])))
        rows.append(_aggregate("actions_cross", N, np.max(np.abs(actions.I - moment.I))))
        return rows

    return _sweep(config, per_N)


def verify_frequencies(config):
    # type: (SweepConfig) -> ConvergenceReport
    """Edge frequencies at order N⁻³ against the KdV frequencies, the bulk
    ratio ω_n/(2 sin(nπ/N)), the near-edge scaling and the band-integral
    cross-check.
    """
    if not config.equilibrium:
        omega_kdv = {side: _hill_frequencies(config, side) for side in ("left", "right")}

    def per_N(N):
        omega = np.asarray(_basis(config, N).freq)
        n = np.arange(1, N)
        rows = []
        if config.equilibrium:
            reference = 2.0 * np.sin(n * np.pi / N)
            rows += [make_row("frequencies_equilibrium", N, k, omega[k - 1], reference[k - 1])
                     for k in n]
        else:
            M, L = edge_widths(N, config.eta_freq)
            scale = -24.0 * (2.0 * N) ** 3
            for side, index in (("left", lambda k: k - 1), ("right", lambda k: N - k - 1)):
                kdv = omega_kdv[side]
                for k in range(1, min(L, len(kdv)) + 1):
                    value = omega[index(k)]
                    rows.append(make_row(
                        "frequencies_" + side, N, k, scale * (value - 2.0 * math.pi * k / N), kdv[k - 1]))
                    rows.append(make_row(
                        "frequencies_hkdv_" + side, N, k, value, hkdv_reference(N, k, kdv[k - 1])))
            bulk = np.arange(M + 1, N - M)
            if len(bulk):
                ratio = omega[bulk - 1] / (2.0 * np.sin(bulk * np.pi / N)) - 1.0
                rows.append(_aggregate("frequencies_bulk", N, np.max(np.abs(ratio))))
            near = np.arange(L + 1, M + 1)
            if len(near):
                drift = np.abs(omega[near - 1] - 2.0 * np.pi * near / N) * N ** 3 / near ** 3
                rows.append(_aggregate("frequencies_near_edge", N, np.max(drift)))
        if N <= CROSS_MAX_N:
            state, spectrum = _state(config, N), _spectrum(config, N)
            b5 = frequencies_via_B5(
                state, spectrum, _basis(config, N), _actions(config, N), config.settings)
            rows.append(_aggregate("frequencies_cross", N, np.max(np.abs(b5 / omega - 1.0))))
        return rows

    return _sweep(config, per_N)


def _zero_of(sigma, k, ell):
    # type: (np.ndarray, int, int) -> float
    """σ_ℓ of φ_k from the foreign-gap ordered zero list."""
    return float(sigma[ell - 1 if ell < k else ell - 2])


def verify_zeros(config):
    # type: (SweepConfig) -> ConvergenceReport
    """4N²(σ^{N,k}_ℓ + 2) against σ^{−,k}_ℓ and the mirrored right edge for
    1 ≤ k, ℓ ≤ L, k ≠ ℓ; one row per k holding its worst ℓ.
    """
    def per_N(N):
        spectrum, basis = _spectrum(config, N), _basis(config, N)
        rows = []
        if config.equilibrium:
            for k in range(1, min(EQUILIBRIUM_ZEROS, N - 1) + 1):
                sigma = phi_zeros(basis, spectrum, k, config.settings)
                ell = np.array([m for m in range(1, N) if m != k])
                reference = -2.0 * np.cos(ell * np.pi / N)
                worst = int(np.argmax(np.abs(sigma - reference)))
                rows.append(make_row("zeros_equilibrium", N, k, sigma[worst], reference[worst]))
            return rows

        _, L = edge_widths(N, config.eta_action)
        if L < 2:
            return rows
        scale = 4.0 * N * N
        for side in ("left", "right"):
            q, hs = _potential(config, side), _hill(config, side)
            K_sigma = _hill_settings(config)["K_sigma"]
            for k in range(1, L + 1):
                kdv_sigma = kdv_psi(q, hs, k, K_sigma, _hill_settings(config)).sigma
                if side == "left":
                    sigma = phi_zeros(basis, spectrum, k, config.settings)
                    pairs = [(scale * (_zero_of(sigma, k, ell) + 2.0), kdv_sigma[ell - 1])
                             for ell in range(1, L + 1) if ell != k]
                else:
                    sigma = phi_zeros(basis, spectrum, N - k, config.settings)
                    pairs = [(scale * (2.0 - _zero_of(sigma, N - k, N - ell)), kdv_sigma[ell - 1])
                             for ell in range(1, L + 1) if ell != k]
                computed, reference = max(pairs, key=lambda pair: abs(pair[0] - pair[1]))
                rows.append(make_row("zeros_" + side, N, k, computed, reference))
        return rows

    return _sweep(config, per_N)


def verify_symmetry(state, settings=None):
    # type: (TodaState, Optional[SpectraSettings]) -> ConvergenceReport
    """Identities between a state and its reflection, each as one sup row."""
    settings = settings or SpectraSettings()
    clock = timer()
    N = state.N
    parity = (-1) ** N
    mirror = reflect(state)
    spectrum, m_spectrum = eigenvalues_Q(state, settings), eigenvalues_Q(mirror, settings)
    rows = [_aggregate(
        "symmetry_eigenvalues", N, np.max(np.abs(m_spectrum.lam + spectrum.lam[::-1])))]

    grid = np.linspace(spectrum.lam[0], spectrum.lam[-1], SYMMETRY_GRID)
    delta, _ = discriminant(mirror, grid)
    reference, _ = discriminant(state, -grid)
    rows.append(_aggregate(
        "symmetry_discriminant", N,
        np.max(np.abs(delta - parity * reference) / np.maximum(1.0, np.abs(reference)))))

    actions, m_actions = actions_arcosh(state, spectrum, settings), actions_arcosh(mirror, m_spectrum, settings)
    rows.append(_aggregate("symmetry_actions", N, np.max(np.abs(m_actions.I - actions.I[::-1]))))
    rows.append(_aggregate("symmetry_j", N, np.max(np.abs(m_actions.J - actions.J[::-1]))))

    basis = psi_basis(period_matrix(state, spectrum, settings))
    m_basis = psi_basis(period_matrix(mirror, m_spectrum, settings))
    worst = 0.0
    for n in sorted({1, N // 2, N - 1}):
        values = phi_values(m_basis, n, grid)
        expected = parity * phi_values(basis, N - n, -grid)
        worst = max(worst, float(np.max(np.abs(values - expected)) / np.max(np.abs(expected))))
    rows.append(_aggregate("symmetry_phi", N, worst))

    omega = np.asarray(basis.freq)
    rows.append(_aggregate(
        "symmetry_frequencies", N, np.max(np.abs(m_basis.freq / omega[::-1] - 1.0))))
    b5 = frequencies_via_B5(mirror, m_spectrum, m_basis, m_actions, settings)
    rows.append(_aggregate(
        "symmetry_frequencies_b5", N, np.max(np.abs(b5 / omega[::-1] - 1.0))))

    util.debug.log_solver("verify_symmetry", clock.elapsed(), N=N)
    return ConvergenceReport(rows, {})


def _verify_symmetry_sweep(config):
    # type: (SweepConfig) -> ConvergenceReport
    Ns = [N for N in config.N_list if N <= SYMMETRY_MAX_N] or list(config.N_list[:1])
    reports = parallel_map(lambda N: verify_symmetry(_state(config, N), config.settings), Ns)
    return ConvergenceReport(list(flatten(report.rows for report in reports)), {})


VERIFIERS = {
    "spectrum": verify_spectrum,
    "discriminant": verify_discriminant,
    "actions": verify_actions,
    "frequencies": verify_frequencies,
    "zeros": verify_zeros,
    "symmetry": _verify_symmetry_sweep,
}  # type: Dict[str, Callable[[SweepConfig], ConvergenceReport]]


def verify(config, target="all"):
    # type: (SweepConfig, str) -> ConvergenceReport
    """Run one verification target, or all of them, and mark failing rows."""
    targets = TARGETS if target == "all" else (target,)
    unknown = [t for t in targets if t not in VERIFIERS]
    if unknown:
        raise exceptions.ConfigError("unknown verify target {!r}".format(unknown[0]), key="target")
    report = ConvergenceReport([], {})
    for name in targets:
        clock = timer()
        report = report.extend(VERIFIERS[name](config))
        util.debug.log_solver("verify", clock.elapsed(), target=name, rows=len(report.rows))
    return evaluate_acceptance(report, config.tolerances)


def fit_rate(rows):
    # type: (Iterable[ReportRow]) -> Slopes
    """Least-squares slope of log(abs_err) against log(N) per (check, n).

    Groups seen at fewer than three N values get no slope.  Exact zeros are
    lifted to the smallest positive float so every slope is finite.
    """
    rows = list(rows)
    if len({row.N for row in rows}) < 3:
        raise exceptions.InsufficientData(
            "a rate needs at least three N values, got {}".format(len({row.N for row in rows})))
    slopes = {}  # type: Slopes
    for key, group in group_by(lambda row: (row.check, row.n), rows).items():
        Ns = np.array([row.N for row in group], dtype=float)
        if len(np.unique(Ns)) < 3:
            continue
        errors = np.maximum([row.abs_err for row in group], np.finfo(float).tiny)
        slopes[key] = float(np.polyfit(np.log(Ns), np.log(errors), 1)[0])
    return slopes


# Acceptance rules: each receives the rows of one (check, n) group sorted
# by N, the group's slope and the tolerances, and returns the failing rows.

def _within(field, key):
    def rule(rows, slope, tol):
        return [row for row in rows if not getattr(row, field) <= tol[key]]
    return rule


def _decreasing(rows, tol):
    first, last = rows[0], rows[-1]
    return last.abs_err < first.abs_err or last.abs_err <= tol["equilibrium"]


def _trend(slope_key=None, n_max=None):
    def rule(rows, slope, tol):
        if len(rows) < 2 or (n_max is not None and rows[0].n > n_max):
            return []
        bound = tol[slope_key] if slope_key else 0.0
        ok = _decreasing(rows, tol) and (slope is None or slope < bound)
        return [] if ok else [rows[-1]]
    return rule


def _final(field, key, n_max=None):
    def rule(rows, slope, tol):
        if n_max is not None and rows[0].n > n_max:
            return []
        last = rows[-1]
        ok = getattr(last, field) < tol[key]
        if len(rows) > 1:
            ok = ok and getattr(last, field) < getattr(rows[0], field)
        return [] if ok else [last]
    return rule


def _bounded(factor=4.0):
    def rule(rows, slope, tol):
        if len(rows) < 2:
            return []
        ok = math.isfinite(rows[-1].abs_err) and rows[-1].abs_err <= factor * rows[0].abs_err
        return [] if ok else [rows[-1]]
    return rule


RULES = {
    "spectrum_equilibrium": _within("abs_err", "eigen_abs"),
    "spectrum_left": _trend("spectrum_slope", n_max=4),
    "spectrum_right": _trend("spectrum_slope", n_max=4),
    "spectrum_bulk": _trend(),
    "discriminant_left": _trend(),
    "discriminant_left_derivative": _trend(),
    "discriminant_right": _trend(),
    "discriminant_right_derivative": _trend(),
    "actions_equilibrium": _within("abs_err", "equilibrium"),
    "actions_left": _final("rel_err", "actions_rel", n_max=1),
    "actions_right": _final("rel_err", "actions_rel", n_max=1),
    "actions_bulk": _trend(),
    "actions_cross": _within("abs_err", "cross_actions"),
    "frequencies_equilibrium": _within("rel_err", "equilibrium"),
    "frequencies_left": _final("rel_err", "frequencies_rel", n_max=1),
    "frequencies_right": _final("rel_err", "frequencies_rel", n_max=1),
    "frequencies_bulk": _final("abs_err", "bulk_ratio"),
    "frequencies_near_edge": _bounded(),
    "frequencies_cross": _within("abs_err", "cross_frequencies"),
    "zeros_equilibrium": _within("abs_err", "equilibrium"),
    "zeros_left": _trend(),
    "zeros_right": _trend(),
    "symmetry_eigenvalues": _within("abs_err", "symmetry"),
    "symmetry_discriminant": _within("abs_err", "symmetry"),
    "symmetry_actions": _within("abs_err", "symmetry"),
    "symmetry_j": _within("abs_err", "symmetry"),
    "symmetry_phi": _within("abs_err", "symmetry"),
    "symmetry_frequencies": _within("abs_err", "symmetry"),
    "symmetry_frequencies_b5": _within("abs_err", "cross_frequencies"),
}


def evaluate_acceptance(report, tolerances=None):
    # type: (ConvergenceReport, Optional[Dict[str, float]]) -> ConvergenceReport
    """Flag the rows that violate their check's acceptance rule.

    Checks without a rule (the ℋ_KdV residuals and the J-quotients) are
    recorded only.
    """
    tol = dict(ACCEPTANCE_DEFAULTS)
    tol.update(tolerances or {})
    failing = set()
    for (check, n), group in group_by(lambda row: (row.check, row.n), report.rows).items():
        rule = RULES.get(check)
        if rule is None:
            continue
        group = sorted(group, key=lambda row: row.N)
        failing.update(id(row) for row in rule(group, report.slopes.get((check, n)), tol))
    rows = [row._replace(failed=id(row) in failing) for row in report.rows]
    return ConvergenceReport(rows, report.slopes)


def _bulk_rows(N, M):
    # type: (int, int) -> int
    return 1 if N - M - 1 > M else 0


def _rows_for(config, target, N):
    # type: (SweepConfig, str, int) -> int
    if target == "symmetry":
        return 7
    if target == "discriminant":
        return 4
    cross = 1 if N <= CROSS_MAX_N else 0
    if config.equilibrium:
        return {
            "spectrum": 2 * N,
            "actions": N,
            "frequencies": N - 1 + cross,
            "zeros": min(EQUILIBRIUM_ZEROS, N - 1),
        }[target]
    M_act, L_act = edge_widths(N, config.eta_action)
    M_freq, L_freq = edge_widths(N, config.eta_freq)
    if target == "spectrum":
        return 2 * (2 * M_act + 1) + _bulk_rows(N, M_act)
    if target == "actions":
        return 4 * L_act + _bulk_rows(N, M_act) + 1
    if target == "frequencies":
        L = min(L_freq, _hill_settings(config)["n_max"])
        return 4 * L + _bulk_rows(N, M_freq) + (1 if M_freq > L_freq else 0) + cross
    if target == "zeros":
        return 2 * L_act if L_act >= 2 else 0
    raise exceptions.ConfigError("unknown verify target {!r}".format(target), key="target")


def row_count(config, target="all"):
    # type: (SweepConfig, str) -> int
    """Rows `verify(config, target)` emits.

    Per N, with M = ⌊N^η⌋, L = ⌊M^η⌋ and bulk = 1 when M < N − M − 1:

      spectrum      2N at equilibrium, else 2(2M + 1) + bulk        (η_action)
      discriminant  4
      actions       N at equilibrium, else 4L + bulk + 1            (η_action)
      frequencies   N − 1 at equilibrium, else 4L + bulk + [M > L]  (η_freq)
                    plus one band-integral cross row for N ≤ 128
      zeros         min(3, N − 1) at equilibrium, else 2L when L ≥ 2 (η_action)
      symmetry      7 for every N ≤ 128, or for the first N when none is
    """
    targets = TARGETS if target == "all" else (target,)
    total = 0
    for name in targets:
        if name == "symmetry":
            Ns = [N for N in config.N_list if N <= SYMMETRY_MAX_N] or list(config.N_list[:1])
        else:
            Ns = list(config.N_list)
        total += sum(_rows_for(config, name, N) for N in Ns)
    return total
