"""Discriminant and periodic spectrum of the Jacobi matrix of a Toda state.

Δ_N is evaluated through the three-term recursion

    a_{k−1}·y(k−1) + b_k·y(k) + a_k·y(k+1) = μ·y(k)

as a truncated Taylor series in μ, which yields Δ_N and as many
μ-derivatives as requested in one sweep over the chain.
"""
from collections import namedtuple

import numpy as np
from numpy.polynomial import polynomial as P

from .core import exceptions
from .core.roots import bisect, newton_polish
from .core.settings import settings_or_default
from .core.utils import timer
from .common import util


__all__ = (
    "SpectrumN",
    "CRootValue",
    "GapSamples",
    "discriminant_series",
    "discriminant",
    "eigenvalues_Q",
    "eigenvalues_L",
    "croot_delta_sq",
    "croot_chi",
    "croot_value",
    "chi_log_abs",
    "gap_sign",
    "gap_samples",
    "closed_gap_ratio",
    "spectral_width",
    "locate",
)

MYPY = False
if MYPY:
    from typing import NamedTuple, Optional, Tuple, Union
    from .core.settings import SpectraSettings
    from .core.types import Array, GapIndex, Side
    from .toda_model import TodaState
    SpectrumN = NamedTuple("SpectrumN", [
        ("N", int),
        ("lam", Array),          # λ_0 .. λ_{2N−1}
        ("gap_len", Array),      # γ_n, n = 1..N−1
        ("tau", Array),          # τ_n
        ("dot_lambda", Array),   # zeros of Δ̇_N, one per gap
        ("parity", str),         # "even" | "odd"
        ("closed", Array),       # bool per gap
        ("excess", Array),       # s_n·Δ(λ̇_n) − 2 ≥ 0
        ("bounds", Tuple[float, float]),
    ])
    CRootValue = NamedTuple("CRootValue", [("magnitude", float), ("phase_class", str)])
    GapSamples = NamedTuple("GapSamples", [
        ("mu", Array),
        ("delta", Array),
        ("delta_dot", Array),
        ("excess", Array),   # s·Δ/2 − 1
        ("ratio", Array),    # R = (Δ²−4)/((μ−λ_{2n−1})(λ_{2n}−μ)) > 0
    ])
else:
    SpectrumN = namedtuple(
        "SpectrumN", "N lam gap_len tau dot_lambda parity closed excess bounds")
    CRootValue = namedtuple("CRootValue", "magnitude phase_class")
    GapSamples = namedtuple("GapSamples", "mu delta delta_dot excess ratio")


POSITIVE_REAL = "positive-real"
NEGATIVE_REAL = "negative-real"
POSITIVE_IMAGINARY = "positive-imaginary"
NEGATIVE_IMAGINARY = "negative-imaginary"

_PHASE_VALUES = {
    POSITIVE_REAL: 1,
    NEGATIVE_REAL: -1,
    POSITIVE_IMAGINARY: 1j,
    NEGATIVE_IMAGINARY: -1j,
}


def discriminant_series(state, mu, order=1):
    # type: (TodaState, Union[float, Array], int) -> Array
    """Taylor coefficients d_0..d_order of Δ_N around each μ.

    The result has shape `np.shape(mu) + (order + 1,)`.
    """
    mu = np.asarray(mu, dtype=float)
    centers = mu.ravel()
    size = order + 1
    b, a = state.b, state.a

    # [0] follows y₁ with y₁(0) = 1, y₁(1) = 0; [1] follows y₂ with y₂(0) = 0, y₂(1) = 1
    prev = np.zeros((2, centers.size, size))
    current = np.zeros((2, centers.size, size))
    prev[0, :, 0] = 1.0
    current[1, :, 0] = 1.0
    for k in range(1, state.N + 1):
        shifted = (centers - b[k - 1])[None, :, None] * current
        shifted[..., 1:] += current[..., :-1]
        prev, current = current, (shifted - a[k - 2] * prev) / a[k - 1]

    # prev holds y(N), current holds y(N + 1)
    series = prev[0] + current[1]
    return series.reshape(mu.shape + (size,))


def discriminant(state, mu):
    # type: (TodaState, Union[float, Array]) -> Tuple[Union[float, Array], Union[float, Array]]
    series = discriminant_series(state, mu, 1)
    delta, delta_dot = series[..., 0], series[..., 1]
    if np.ndim(mu) == 0:
        return float(delta), float(delta_dot)
    return delta, delta_dot


def gap_sign(N, n):
    # type: (int, Union[int, Array]) -> Union[int, Array]
    """s_n = (−1)^{N−n}: the sign of Δ_N on gap n."""
    return 1 - 2 * ((N - np.asarray(n)) % 2)


def _spectral_bounds(state):
    # type: (TodaState) -> Tuple[float, float]
    reach = 2.0 * float(np.max(state.a))
    return float(np.min(state.b)) - reach - 1e-3, float(np.max(state.b)) + reach + 1e-3


def _dot_zero_brackets(state, lo, hi, refinements):
    # type: (TodaState, float, float, int) -> Tuple[Array, Array]
    N = state.N
    i = np.arange(N)
    center = state.trace_p / N
    halfwidth = 2.0 * state.prod_q ** (1.0 / N)
    grid = np.unique(np.clip(np.concatenate((
        [lo], center - halfwidth * np.cos((i + 0.5) * np.pi / N), [hi]
    )), lo, hi))
    found = 0
    for _ in range(refinements + 1):
        slope = discriminant_series(state, grid, 1)[:, 1]
        sign = np.where(slope >= 0, 1, -1)
        changes = np.flatnonzero(sign[:-1] != sign[1:])
        found = len(changes)
        if found == N - 1:
            return grid[changes], grid[changes + 1]
        grid = np.sort(np.concatenate((grid, 0.5 * (grid[:-1] + grid[1:]))))
    raise exceptions.BracketFailure(
        "isolated {} of the {} zeros of the discriminant's derivative".format(found, N - 1),
        details={"N": N})


def eigenvalues_Q(state, settings=None):
    # type: (TodaState, Optional[SpectraSettings]) -> SpectrumN
    """All 2N periodic/antiperiodic eigenvalues, i.e. the roots of Δ_N² = 4."""
    settings = settings_or_default(settings)
    clock = timer()
    N = state.N
    xtol = settings["xtol"]
    polish = settings["polish_steps"]
    lo, hi = _spectral_bounds(state)
    width = hi - lo

    # zeros of Δ̇, one per gap
    left, right = _dot_zero_brackets(state, lo, hi, settings["bracket_refinements"])
    gaps = np.arange(1, N)

    def slope(x, _):
        return discriminant_series(state, x, 1)[:, 1]

    def slope_d(x, _):
        series = discriminant_series(state, x, 2)
        return series[:, 1], 2.0 * series[:, 2]

    dot, left, right = bisect(slope, left, right, xtol, indices=gaps, what="discriminant critical point")
    dot = newton_polish(slope_d, dot, left, right, polish)

    s = gap_sign(N, gaps)
    excess = np.maximum(s * discriminant_series(state, dot, 0)[:, 0] - 2.0, 0.0)
    # rounding in the recursion grows like N³ on degenerate chains
    closed = excess <= settings["noise_floor"] * N ** 3

    # band edges: each root solves target·Δ = 2 inside a monotone stretch of Δ
    ext = np.concatenate(([lo], dot, [hi]))
    open_gaps = gaps[~closed]
    target = np.concatenate(([(-1) ** N], s[~closed], s[~closed], [1])).astype(float)
    lower = np.concatenate(([lo], ext[open_gaps - 1], ext[open_gaps], [ext[N - 1]]))
    upper = np.concatenate(([ext[1]], ext[open_gaps], ext[open_gaps + 1], [hi]))
    labels = np.concatenate(([0], open_gaps, open_gaps, [N]))

    def level(x, which):
        return target[which] * discriminant_series(state, x, 0)[:, 0] - 2.0

    def level_d(x, which):
        series = discriminant_series(state, x, 1)
        return target[which] * series[:, 0] - 2.0, target[which] * series[:, 1]

    edges, e_lo, e_hi = bisect(level, lower, upper, xtol, indices=labels, what="band edge")
    edges = newton_polish(level_d, edges, e_lo, e_hi, polish)

    lam = np.empty(2 * N)
    lam[0], lam[-1] = edges[0], edges[-1]
    lam[1:-1:2] = dot
    lam[2:-1:2] = dot
    count = len(open_gaps)
    lam[2 * open_gaps - 1] = edges[1:1 + count]
    lam[2 * open_gaps] = edges[1 + count:1 + 2 * count]

    gap_len = lam[2:-1:2] - lam[1:-1:2]
    closed |= gap_len < settings["degeneracy_eps"] * width
    lam[2 * gaps[closed] - 1] = dot[closed]
    lam[2 * gaps[closed]] = dot[closed]
    gap_len = np.where(closed, 0.0, gap_len)
    if np.any(np.diff(lam) < 0):
        bad = int(np.flatnonzero(np.diff(lam) < 0)[0])
        raise exceptions.BracketFailure(
            "eigenvalues {} and {} are out of order".format(bad, bad + 1), n=(bad + 1) // 2)

    tau = 0.5 * (lam[1:-1:2] + lam[2:-1:2])
    for array in (lam, gap_len, tau, dot, closed, excess):
        array.setflags(write=False)
    util.debug.log_solver(
        "spectrum", clock.elapsed(), N=N, open_gaps=int(np.sum(~closed)))
    return SpectrumN(
        N, lam, gap_len, tau, dot, "even" if N % 2 == 0 else "odd", closed, excess, (lo, hi))


def eigenvalues_L(spectrum):
    # type: (SpectrumN) -> Array
    """The N eigenvalues of L(b, a): those λ_j with Δ_N(λ_j) = 2."""
    j = np.arange(2 * spectrum.N)
    keep = (0, 3) if spectrum.parity == "even" else (1, 2)
    return spectrum.lam[np.isin(j % 4, keep)]


def spectral_width(spectrum):
    # type: (SpectrumN) -> float
    lo, hi = spectrum.bounds
    return hi - lo


def locate(spectrum, mu):
    # type: (SpectrumN, float) -> Tuple[str, int]
    """("below" | "above" | "band" | "gap", index) for a point off the spectrum edges."""
    count = int(np.searchsorted(spectrum.lam, mu, side="left"))
    if count == 0:
        return "below", 0
    if count == 2 * spectrum.N:
        return "above", 0
    if count % 2:
        return "band", (count + 1) // 2
    return "gap", count // 2


def croot_delta_sq(state, spectrum, mu, side="below", settings=None):
    # type: (TodaState, SpectrumN, float, Side, Optional[SpectraSettings]) -> CRootValue
    """The canonical root √[c]{Δ_N(μ ∓ i0)² − 4}.

    Its cuts are the gaps and the two exterior half lines; on band j it is
    i(−1)^{N+j}√(4 − Δ²) from either side.
    """
    settings = settings_or_default(settings)
    if side not in ("below", "above"):
        raise ValueError("side must be 'below' or 'above', got {!r}".format(side))
    eps = settings["boundary_eps"] * spectral_width(spectrum)
    distance = np.abs(spectrum.lam - mu)
    if np.min(distance) < eps:
        j = int(np.argmin(distance))
        raise exceptions.OnSpectrumBoundary(
            "mu={!r} sits on the eigenvalue lambda_{}".format(mu, j), n=j)

    N = spectrum.N
    delta, _ = discriminant(state, float(mu))
    magnitude = float(np.sqrt(abs(delta * delta - 4.0)))
    where, index = locate(spectrum, mu)
    if where == "band":
        sign = (-1) ** (N + index)
        return CRootValue(magnitude, POSITIVE_IMAGINARY if sign > 0 else NEGATIVE_IMAGINARY)

    if where == "gap":
        sign = (-1) ** (N + 1 - index)
    elif where == "above":
        sign = -1
    else:
        sign = (-1) ** (N + 1)
    if side == "above":
        sign = -sign
    return CRootValue(magnitude, POSITIVE_REAL if sign > 0 else NEGATIVE_REAL)


def croot_chi(state, spectrum, mu, side="below", settings=None):
    # type: (TodaState, SpectrumN, float, Side, Optional[SpectraSettings]) -> CRootValue
    """√[c]{χ_N} = 𝔮_N·√[c]{Δ_N² − 4}."""
    root = croot_delta_sq(state, spectrum, mu, side, settings)
    return CRootValue(state.prod_q * root.magnitude, root.phase_class)


def croot_value(root):
    # type: (CRootValue) -> complex
    return root.magnitude * _PHASE_VALUES[root.phase_class]


def chi_log_abs(spectrum, mu):
    # type: (SpectrumN, Union[float, Array]) -> Union[float, Array]
    """log|χ_N(μ)| = Σ_j log|μ − λ_j|."""
    mu = np.asarray(mu, dtype=float)
    value = np.sum(np.log(np.abs(np.subtract.outer(mu, spectrum.lam))), axis=-1)
    return float(value) if value.ndim == 0 else value


def closed_gap_ratio(state, spectrum, n, settings=None):
    # type: (TodaState, SpectrumN, GapIndex, Optional[SpectraSettings]) -> float
    """Limit of R on a closed gap n: −(Δ(τ) + 2s)·Δ̈(τ)/2."""
    d = discriminant_series(state, spectrum.tau[n - 1], 2)
    s = gap_sign(spectrum.N, n)
    return float(-(d[0] + 2 * s) * d[2])


def _uses_series(spectrum, n, settings):
    # type: (SpectrumN, GapIndex, SpectraSettings) -> bool
    lam = spectrum.lam
    tau = spectrum.tau[n - 1]
    reach = min(tau - lam[max(2 * n - 3, 0)], lam[min(2 * n + 2, 2 * spectrum.N - 1)] - tau)
    return 0.5 * spectrum.gap_len[n - 1] <= settings["narrow_gap_ratio"] * reach


def gap_samples(state, spectrum, n, t, settings=None):
    # type: (TodaState, SpectrumN, GapIndex, Array, Optional[SpectraSettings]) -> GapSamples
    """Δ, Δ̇, the excess sΔ/2 − 1 and R at μ = τ_n + (γ_n/2)·t, |t| < 1.

    For gaps narrow compared to their surroundings, Δ − 2s is factored as
    (x² − c)·h(x) around τ_n with c = (γ_n/2)², so R and the excess keep
    full relative accuracy next to the gap edges.
    """
    settings = settings_or_default(settings)
    if spectrum.closed[n - 1]:
        raise exceptions.ClosedGap("gap {} is closed".format(n), n=n)
    t = np.asarray(t, dtype=float)
    s = gap_sign(spectrum.N, n)
    tau = spectrum.tau[n - 1]
    half = 0.5 * spectrum.gap_len[n - 1]
    x = half * t
    mu = tau + x

    if _uses_series(spectrum, n, settings):
        d = discriminant_series(state, tau, settings["series_order"])
        shifted = d.copy()
        shifted[0] -= 2 * s
        c = half * half
        size = len(d)
        h = np.zeros(size - 2)
        for m in range(size - 1, 1, -1):
            h[m - 2] = shifted[m] + (c * h[m] if m <= size - 3 else 0.0)
        quotient = P.polyval(x, h)
        factor = (x * x - c) * quotient
        delta = 2 * s + factor
        delta_dot = P.polyval(x, P.polyder(d))
        excess = s * factor / 2.0
        ratio = -(delta + 2 * s) * quotient
    else:
        delta, delta_dot = discriminant(state, mu)
        excess = s * delta / 2.0 - 1.0
        lower, upper = spectrum.lam[2 * n - 1], spectrum.lam[2 * n]
        ratio = (delta * delta - 4.0) / ((mu - lower) * (upper - mu))
    return GapSamples(mu, delta, delta_dot, excess, ratio)
