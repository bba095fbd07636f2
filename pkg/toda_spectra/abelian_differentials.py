"""Normalized differentials ψ_n on the Toda spectral curve and the frequencies they carry.

ψ_n = Σ_j c_{n,j}·T_j(μ/2) dμ / √[c]{Δ_N² − 4} with the gap-cycle
normalization (1/π)∫_{gap k} ψ_n(μ − i0) = δ_{nk}.  T_m(μ/2) has leading
coefficient ½, so ω_n = 𝔮_N·c_{n,N−2}/2.
"""
from collections import namedtuple

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P

from .common import util
from .core import exceptions
from .core.quadrature import adaptive, band_distance, band_rule, chebyshev_nodes
from .core.roots import safeguarded_newton
from .core.runtime import parallel_map
from .core.settings import settings_or_default
from .core.utils import timer
from .jacobi_spectral import (
    closed_gap_ratio,
    discriminant,
    discriminant_series,
    gap_samples,
    spectral_width,
)


__all__ = (
    "PeriodMatrix",
    "DifferentialBasis",
    "gap_cycle_integral",
    "gap_root_factor",
    "period_matrix",
    "psi_basis",
    "phi_zeros",
    "phi_values",
    "phi_quotient",
    "band_integral_first_kind",
    "band_integral_direct",
    "frequencies_via_B5",
    "frequency_mean_value",
    "frequency_mean_value_bounds",
    "normalization_residual",
)

MYPY = False
if MYPY:
    from typing import Callable, Dict, NamedTuple, Optional, Tuple
    from .core.settings import SpectraSettings
    from .core.quadrature import BandNodes
    from .core.types import Array, BandIndex, GapIndex
    from .jacobi_spectral import SpectrumN
    from .toda_model import TodaState
    PeriodMatrix = NamedTuple("PeriodMatrix", [
        ("A", Array),              # rows: gaps k = 1..N−1, columns: T_0..T_{N−2}
        ("basis", str),
        ("cond", float),
        ("nodes", Array),          # quadrature nodes used per row, 0 for closed gaps
        ("state", TodaState),
        ("spectrum", SpectrumN),
    ])
    DifferentialBasis = NamedTuple("DifferentialBasis", [
        ("coeffs", Array),         # row n−1 holds the Chebyshev coefficients of ψ_n
        ("freq", Array),           # ω_n
        ("sigma", Dict[int, Array]),  # n -> zeros σ_k of φ_n, filled by phi_zeros
        ("residual", Array),       # per-row max |A·c_n − e_n|
        ("period_matrix", PeriodMatrix),
    ])
else:
    PeriodMatrix = namedtuple("PeriodMatrix", "A basis cond nodes state spectrum")
    DifferentialBasis = namedtuple("DifferentialBasis", "coeffs freq sigma residual period_matrix")


CHEBYSHEV_HALF = "chebyshev T_j(mu/2)"
RESIDUAL_LIMIT = 1e-9
# gaps narrower than this many degeneracy thresholds keep σ = τ
UNRESOLVED_GAP = 1e3


def _cycle_sign(N, k):
    # type: (int, GapIndex) -> int
    """Sign of √[c]{Δ² − 4}(μ − i0) on gap k."""
    return (-1) ** (N + 1 - k)


def gap_root_factor(state, spectrum, k, mu, root="chi", settings=None):
    # type: (TodaState, SpectrumN, GapIndex, Array, str, Optional[SpectraSettings]) -> Array
    """Signed √R on gap k, where √[c]{root}(μ − i0) = √R·√((μ − λ_{2k−1})(λ_{2k} − μ))."""
    half = 0.5 * spectrum.gap_len[k - 1]
    t = (np.asarray(mu, dtype=float) - spectrum.tau[k - 1]) / half
    ratio = gap_samples(state, spectrum, k, t, settings).ratio
    scale = state.prod_q if root == "chi" else 1.0
    return _cycle_sign(spectrum.N, k) * scale * np.sqrt(ratio)


def gap_cycle_integral(state, spectrum, k, f, root="chi", settings=None):
    # type: (TodaState, SpectrumN, GapIndex, Callable[[Array], Array], str, Optional[SpectraSettings]) -> Array
    """(1/π)∫_{gap k} f(μ) / √[c]{χ_N(μ − i0)} dμ.

    With `root="delta"` the denominator is √[c]{Δ_N² − 4} instead.  `f` may
    return a stack of integrands with the node axis last.
    """
    settings = settings_or_default(settings)
    if spectrum.closed[k - 1]:
        raise exceptions.ClosedGap("gap {} is closed".format(k), n=k)
    sign = _cycle_sign(spectrum.N, k)
    scale = state.prod_q if root == "chi" else 1.0

    def estimate(count):
        samples = gap_samples(state, spectrum, k, chebyshev_nodes(count), settings)
        values = np.asarray(f(samples.mu), dtype=float)
        return sign * np.mean(values / (scale * np.sqrt(samples.ratio)), axis=-1)

    value, _ = adaptive(
        estimate, settings["min_nodes"], settings["max_nodes"], settings["quad_tol"],
        what="gap cycle integral", n=k)
    return value


def _basis_values(mu, degree):
    # type: (Array, int) -> Array
    """T_0..T_degree at μ/2, one row per polynomial; a vector for scalar μ."""
    mu = np.asarray(mu, dtype=float)
    values = C.chebvander(mu / 2.0, degree)
    if mu.ndim == 0:
        # chebvander promotes 0-d input to shape (1, degree + 1)
        return values[0]
    return np.moveaxis(values, -1, 0)


def _period_row(state, spectrum, k, settings):
    # type: (TodaState, SpectrumN, GapIndex, SpectraSettings) -> Tuple[Array, int]
    degree = spectrum.N - 2
    if spectrum.closed[k - 1]:
        tau = spectrum.tau[k - 1]
        ratio = closed_gap_ratio(state, spectrum, k, settings)
        row = _cycle_sign(spectrum.N, k) * _basis_values(tau, degree) / np.sqrt(ratio)
        return row, 0

    sign = _cycle_sign(spectrum.N, k)

    def estimate(count):
        samples = gap_samples(state, spectrum, k, chebyshev_nodes(count), settings)
        values = _basis_values(samples.mu, degree)
        return sign * np.mean(values / np.sqrt(samples.ratio), axis=-1)

    return adaptive(
        estimate, settings["min_nodes"], settings["max_nodes"], settings["quad_tol"],
        what="period matrix row", n=k)


def period_matrix(state, spectrum, settings=None):
    # type: (TodaState, SpectrumN, Optional[SpectraSettings]) -> PeriodMatrix
    """A[k][j] = (1/π)∫_{gap k} T_j(μ/2) / √[c]{Δ_N² − 4}(μ − i0) dμ.

    Rows of closed gaps hold the limit sign·T_j(τ_k/2)/√R(τ_k).
    """
    settings = settings_or_default(settings)
    clock = timer()
    gaps = range(1, spectrum.N)
    rows = parallel_map(lambda k: _period_row(state, spectrum, k, settings), gaps)
    A = np.array([row for row, _ in rows])
    nodes = np.array([count for _, count in rows])
    cond = float(np.linalg.cond(A))
    A.setflags(write=False)
    util.debug.log_solver(
        "period_matrix", clock.elapsed(), N=spectrum.N, cond="{:.3g}".format(cond))
    return PeriodMatrix(A, CHEBYSHEV_HALF, cond, nodes, state, spectrum)


def psi_basis(pm):
    # type: (PeriodMatrix) -> DifferentialBasis
    N = pm.spectrum.N
    if not np.all(np.isfinite(pm.A)) or not np.isfinite(pm.cond) or pm.cond > 1e14:
        raise exceptions.SingularPeriodMatrix(
            "period matrix is numerically singular (cond={:.3g})".format(pm.cond),
            details={"cond": pm.cond})
    try:
        coeffs = np.linalg.solve(pm.A, np.eye(N - 1)).T
    except np.linalg.LinAlgError as e:
        raise exceptions.SingularPeriodMatrix("period matrix solve failed: {}".format(e))

    residual = np.max(np.abs(pm.A @ coeffs.T - np.eye(N - 1)), axis=0)
    if np.any(residual > RESIDUAL_LIMIT):
        n = int(np.argmax(residual)) + 1
        raise exceptions.SingularPeriodMatrix(
            "normalization of psi_{} left a residual of {:.3g}".format(n, residual[n - 1]), n=n)

    freq = pm.state.prod_q * coeffs[:, N - 2] / 2.0
    if np.any(~(freq > 0)):
        n = int(np.flatnonzero(~(freq > 0))[0]) + 1
        raise exceptions.SingularPeriodMatrix(
            "frequency omega_{} = {!r} is not positive".format(n, float(freq[n - 1])), n=n)
    for array in (coeffs, freq, residual):
        array.setflags(write=False)
    return DifferentialBasis(coeffs, freq, {}, residual, pm)


def phi_values(basis, n, mu):
    # type: (DifferentialBasis, GapIndex, Array) -> Array
    """φ_n(μ), the monic polynomial with the zeros of ψ_n."""
    coeffs = basis.coeffs[n - 1]
    lead = coeffs[-1] / 2.0
    return C.chebval(np.asarray(mu) / 2.0, coeffs / lead)


def phi_zeros(basis, spectrum, n, settings=None):
    # type: (DifferentialBasis, SpectrumN, GapIndex, Optional[SpectraSettings]) -> Array
    """The N−2 zeros σ_k of φ_n (k ≠ n), one in each foreign gap.

    Closed gaps, and gaps too narrow for a sign change to be resolved,
    get σ_k = τ_k.
    """
    if n in basis.sigma:
        return basis.sigma[n]
    settings = settings_or_default(settings)
    N = spectrum.N
    coeffs = basis.coeffs[n - 1] / (basis.coeffs[n - 1][-1] / 2.0)
    derivative = C.chebder(coeffs) / 2.0

    foreign = np.array([k for k in range(1, N) if k != n], dtype=int)
    sigma = spectrum.tau[foreign - 1].copy()
    floor = UNRESOLVED_GAP * settings["degeneracy_eps"] * spectral_width(spectrum)
    solve = foreign[spectrum.gap_len[foreign - 1] > floor]
    if len(solve):
        lower = spectrum.lam[2 * solve - 1]
        upper = spectrum.lam[2 * solve]

        def fn_d(x, _):
            return C.chebval(x / 2.0, coeffs), C.chebval(x / 2.0, derivative)

        try:
            roots = safeguarded_newton(
                fn_d, lower, upper, settings["xtol"], settings["newton_max_iter"] * 4,
                indices=solve, what="phi_{} zero".format(n))
        except exceptions.BracketFailure as e:
            raise exceptions.RootCountMismatch(
                "phi_{} has no sign change across gap {}".format(n, e.n), n=e.n)
        sigma[np.searchsorted(foreign, solve)] = roots

    sigma.setflags(write=False)
    basis.sigma[n] = sigma
    return sigma


def phi_quotient(spectrum, sigma, k, mu, distance=None):
    # type: (SpectrumN, Array, GapIndex, Array, Optional[Callable[[Array], Array]]) -> Array
    """|φ_k(μ) / √χ_N(μ)| with the factors shared by closed gaps cancelled.

        1 / (√|μ−λ_0|·√|λ_{2N−1}−μ|·|w_k(μ)|) · Π_{ℓ≠k} |σ_ℓ−μ| / |w_ℓ(μ)|

    `distance(points)` may supply |μ − p| for every node and point; band
    integrals pass the edge-exact distances of their node rule.
    """
    lam = spectrum.lam
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if distance is None:
        distance = lambda points: np.abs(mu[:, None] - points)  # noqa: E731

    foreign = np.array([ell for ell in range(1, spectrum.N) if ell != k], dtype=int)
    open_ = ~spectrum.closed[foreign - 1]
    gaps = foreign[open_]
    points = np.concatenate((
        [lam[0], lam[-1], lam[2 * k - 1], lam[2 * k]],
        np.asarray(sigma)[open_],
        lam[2 * gaps - 1],
        lam[2 * gaps],
    ))
    logs = np.log(distance(points))
    count = len(gaps)
    log_value = (
        -0.5 * np.sum(logs[:, :4], axis=-1)
        + np.sum(logs[:, 4:4 + count], axis=-1)
        - 0.5 * np.sum(logs[:, 4 + count:], axis=-1)
    )
    return np.exp(log_value)


def _band_edges(spectrum, j):
    # type: (SpectrumN, BandIndex) -> Tuple[float, float]
    return spectrum.lam[2 * j - 2], spectrum.lam[2 * j - 1]


def _band_quadrature(spectrum, j, integrand, settings, what):
    # type: (SpectrumN, BandIndex, Callable[[BandNodes], Array], SpectraSettings, str) -> Array
    lower, upper = _band_edges(spectrum, j)

    def estimate(order):
        nodes = band_rule(lower, upper, order)
        return np.sum(integrand(nodes) * nodes.weights, axis=-1)

    value, _ = adaptive(
        estimate, 8, max(16, settings["max_nodes"] // 64), settings["quad_tol"], what=what, n=j)
    return value


def band_integral_first_kind(state, spectrum, j, settings=None, moment=True):
    # type: (TodaState, SpectrumN, BandIndex, Optional[SpectraSettings], bool) -> float
    """∫_{band j} (μ − 𝔭_N/N)·Δ̇_N / (i√[c]{Δ_N² − 4}) dμ after integration by parts.

    With Θ = arccos((−1)^{N+j}Δ_N/2), which runs from π down to 0 across the
    band, the integral is −π(λ_{2j−2} − 𝔭_N/N) − ∫ Θ dμ.  With
    `moment=False` the weight μ − 𝔭_N/N is dropped and the value is −π.
    """
    if not 1 <= j <= spectrum.N:
        raise ValueError("band index must lie in 1..{}, got {}".format(spectrum.N, j))
    if not moment:
        return -np.pi
    settings = settings_or_default(settings)
    center = state.trace_p / state.N
    sign = (-1) ** (state.N + j)

    def angle(nodes):
        delta, _ = discriminant(state, nodes.mu)
        return np.arccos(np.clip(sign * delta / 2.0, -1.0, 1.0))

    lower, _ = _band_edges(spectrum, j)
    area = _band_quadrature(spectrum, j, angle, settings, "band arccos integral")
    return float(-np.pi * (lower - center) - area)


def band_integral_direct(state, spectrum, j, settings=None):
    # type: (TodaState, SpectrumN, BandIndex, Optional[SpectraSettings]) -> float
    """The same band integral evaluated on its square-root singular integrand.

    Within an eighth of the band from either edge, 4 − Δ² and Δ̇ are taken
    from the Taylor series at that edge, where Δ = ±2 exactly.
    """
    settings = settings_or_default(settings)
    center = state.trace_p / state.N
    sign = (-1) ** (state.N + j)
    lower, upper = _band_edges(spectrum, j)
    reach = 0.125 * (upper - lower)
    order = settings["series_order"]
    edge_series = [
        (edge, discriminant_series(state, edge, order)) for edge in (lower, upper)
    ]

    def integrand(nodes):
        delta, delta_dot = discriminant(state, nodes.mu)
        delta_dot = np.array(delta_dot, dtype=float)
        deficit = 4.0 - delta * delta
        for (edge, d), offset in zip(edge_series, (nodes.left, -nodes.right)):
            near = np.abs(offset) <= reach
            x = offset[near]
            level = 1.0 if d[0] >= 0 else -1.0
            drop = -level * x * P.polyval(x, d[1:])
            deficit[near] = drop * (4.0 - drop)
            delta_dot[near] = P.polyval(x, P.polyder(d))
        root = np.sqrt(np.maximum(deficit, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            value = -sign * (nodes.mu - center) * delta_dot / root
        return np.where(root > 0, value, 0.0)

    return float(_band_quadrature(spectrum, j, integrand, settings, "band integral"))


def frequencies_via_B5(state, spectrum, basis, actions, settings=None):
    # type: (TodaState, SpectrumN, DifferentialBasis, object, Optional[SpectraSettings]) -> Array
    """Solve N·ω_n = F_n − Σ_k I_k·ω_k·G_{nk} for ω.

    F_n sums the first-kind band integrals over bands 1..n and
    G_{nk} = Σ_{j≤n} ∫_{band j} φ_k/(i√[c]{χ_N}) dμ, whose integrand is
    +|φ_k/√χ| for k ≥ j and −|φ_k/√χ| for k < j.
    """
    settings = settings_or_default(settings)
    clock = timer()
    N = state.N
    bands = range(1, N)
    first_kind = np.array(parallel_map(
        lambda j: band_integral_first_kind(state, spectrum, j, settings), bands))
    F = np.cumsum(first_kind)

    I = np.asarray(actions.I, dtype=float)
    active = np.flatnonzero(I > 0) + 1
    G = np.zeros((N - 1, N - 1))
    if len(active):
        sigmas = {k: phi_zeros(basis, spectrum, k, settings) for k in active}

        def band_row(j):
            signs = np.where(active >= j, 1.0, -1.0)
            lower, upper = _band_edges(spectrum, j)

            def integrand(nodes):
                def distance(points):
                    return band_distance(nodes, lower, upper, points)

                return np.stack([
                    sign * phi_quotient(spectrum, sigmas[k], k, nodes.mu, distance=distance)
                    for k, sign in zip(active, signs)
                ])

            return _band_quadrature(spectrum, j, integrand, settings, "band quotient integral")

        per_band = np.array(parallel_map(band_row, bands))
        G[:, active - 1] = np.cumsum(per_band, axis=0)

    system = N * np.eye(N - 1) + G * I[None, :]
    try:
        omega = np.linalg.solve(system, F)
    except np.linalg.LinAlgError as e:
        raise exceptions.SingularSystem("band-integral frequency system: {}".format(e))
    if not np.all(np.isfinite(omega)):
        raise exceptions.SingularSystem("band-integral frequency system has no finite solution")
    util.debug.log_solver(
        "frequencies_b5", clock.elapsed(), N=N, active=len(active))
    return omega


def frequency_mean_value(spectrum, sigma, n, mu_star=None):
    # type: (SpectrumN, Array, GapIndex, Optional[float]) -> float
    """√((λ_{2N−1} − μ*)(μ* − λ_0))·Π_{k≠n} √((λ_{2k} − μ*)(λ_{2k−1} − μ*)) / |σ_k − μ*|.

    Exact for a closed gap n with μ* = τ_n.
    """
    lam = spectrum.lam
    mu = spectrum.tau[n - 1] if mu_star is None else float(mu_star)
    foreign = np.array([k for k in range(1, spectrum.N) if k != n], dtype=int)
    log_value = 0.5 * (np.log(lam[-1] - mu) + np.log(mu - lam[0])) + np.sum(
        0.5 * (np.log(np.abs(lam[2 * foreign] - mu)) + np.log(np.abs(lam[2 * foreign - 1] - mu)))
        - np.log(np.abs(np.asarray(sigma) - mu))
    )
    return float(np.exp(log_value))


def frequency_mean_value_bounds(spectrum, sigma, n, samples=257):
    # type: (SpectrumN, Array, GapIndex, int) -> Tuple[float, float]
    """Range of the mean-value form over gap n; ω_n lies inside it."""
    lower, upper = spectrum.lam[2 * n - 1], spectrum.lam[2 * n]
    values = [frequency_mean_value(spectrum, sigma, n, mu) for mu in np.linspace(lower, upper, samples)]
    return min(values), max(values)


def normalization_residual(basis, settings=None):
    # type: (DifferentialBasis, Optional[SpectraSettings]) -> Array
    """max_k |(1/π)∫_{gap k} ψ_n − δ_{nk}| per n, re-integrated with twice the nodes."""
    settings = settings_or_default(settings)
    pm = basis.period_matrix
    state, spectrum = pm.state, pm.spectrum
    N = spectrum.N
    A = np.array(pm.A)
    for k in range(1, N):
        if spectrum.closed[k - 1]:
            continue
        count = 2 * max(int(pm.nodes[k - 1]), settings["min_nodes"])
        samples = gap_samples(state, spectrum, k, chebyshev_nodes(count), settings)
        values = _basis_values(samples.mu, N - 2)
        A[k - 1] = _cycle_sign(N, k) * np.mean(values / np.sqrt(samples.ratio), axis=-1)
    return np.max(np.abs(A @ basis.coeffs.T - np.eye(N - 1)), axis=0)
