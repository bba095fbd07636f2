"""Hill operators −∂² + q of period T and the KdV data of their spectra.

The fundamental system of −y'' + q·y = λ·y is propagated together with its
λ-derivative.  One classical RK4 step of this linear system is itself a
linear map, so all steps are built at once as 4×4 propagators and
multiplied together pairwise.
"""
from collections import namedtuple
from functools import lru_cache
import math
import threading

import numpy as np

from .common import util
from .core import exceptions, store
from .core.quadrature import adaptive, band_distance, band_rule, chebyshev_nodes
from .core.roots import bisect, safeguarded_newton
from .core.runtime import parallel_map
from .core.settings import settings_or_default
from .core.utils import timer
from .toda_actions import arcosh1p


__all__ = (
    "HillOperator",
    "HillSpectrum",
    "KdvDifferential",
    "hill_operator",
    "hill_discriminant",
    "wronskian",
    "hill_eigenvalues",
    "kdv_actions",
    "kdv_j_quotients",
    "kdv_psi",
    "kdv_band_integrals_first_kind",
    "kdv_frequencies",
    "hkdv_reference",
)

MYPY = False
if MYPY:
    from typing import Callable, NamedTuple, Optional, Tuple, Union
    from .core.settings import SpectraSettings
    from .core.types import Array, BandIndex, GapIndex
    from .toda_model import FourierProfile
    HillSpectrum = NamedTuple("HillSpectrum", [
        ("K", int),
        ("period", float),
        ("lam", Array),          # λ_0 .. λ_{2K}
        ("gap_len", Array),      # γ_n, n = 1..K
        ("tau", Array),
        ("dot_lambda", Array),   # zeros of Δ̇, one per gap
        ("closed", Array),
        ("excess", Array),       # (−1)^n·Δ(λ̇_n)/2 − 1
    ])
    KdvDifferential = NamedTuple("KdvDifferential", [
        ("n", int),
        ("sigma", Array),            # σ_k for k = 1..K; entry n holds τ_n and is unused
        ("normalization", float),    # (1/π)∫_{gap n} ψ_n/√[c]{Δ² − 4}
        ("residual", float),         # |normalization − 1|
        ("newton_residual", float),
        ("iterations", int),
    ])
else:
    HillSpectrum = namedtuple(
        "HillSpectrum", "K period lam gap_len tau dot_lambda closed excess")
    KdvDifferential = namedtuple(
        "KdvDifferential", "n sigma normalization residual newton_residual iterations")


# entries per propagator batch, steps × λ values
CHUNK = 2 ** 16
DOT_XTOL = 1e-10
NEWTON_NODES = 64
NOISE_MARGIN = 10.0
PSI_SETTINGS = ("tail_tol", "newton_tol", "newton_max_iter", "quad_tol", "min_nodes", "max_nodes")


@lru_cache(maxsize=32)
def _potential_samples(q, steps):
    # type: (FourierProfile, int) -> Array
    x = np.arange(2 * steps + 1) * (0.5 * q.period / steps)
    values = q(x)
    values.setflags(write=False)
    return values


def _generators(q_values, lam):
    # type: (Array, Array) -> Array
    """d/dx of (y, y', ∂_λy, ∂_λy') for every step and λ."""
    A = np.zeros((len(q_values), len(lam), 4, 4))
    shift = q_values[:, None] - lam[None, :]
    A[..., 0, 1] = A[..., 2, 3] = 1.0
    A[..., 1, 0] = A[..., 3, 2] = shift
    A[..., 3, 0] = -1.0
    return A


def _rk4_propagators(q_samples, lam, h):
    # type: (Array, Array, float) -> Array
    eye = np.eye(4)
    A0 = _generators(q_samples[0:-1:2], lam)
    Ah = _generators(q_samples[1::2], lam)
    A1 = _generators(q_samples[2::2], lam)
    K1 = A0
    K2 = Ah @ (eye + 0.5 * h * K1)
    K3 = Ah @ (eye + 0.5 * h * K2)
    K4 = A1 @ (eye + h * K3)
    return eye + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)


def _ordered_product(P):
    # type: (Array) -> Array
    """P[S−1] @ … @ P[0] by pairwise reduction along the first axis."""
    while len(P) > 1:
        even = len(P) - len(P) % 2
        paired = P[1:even:2] @ P[0:even:2]
        P = np.concatenate((paired, P[even:])) if even < len(P) else paired
    return P[0]


class HillOperator:
    """Monodromy of −y'' + q·y = λ·y over one period, with its λ-derivative."""

    def __init__(self, q, settings=None):
        # type: (FourierProfile, Optional[SpectraSettings]) -> None
        self.q = q
        self.settings = settings_or_default(settings)
        self.n_base = int(self.settings["hill_n_base"])
        self.noise = 0.0
        self._calibrated = False
        self._lock = threading.Lock()

    @property
    def period(self):
        # type: () -> float
        return self.q.period

    def __repr__(self):
        return "HillOperator(K={}, n_base={})".format(self.q.K, self.n_base)

    def step_count(self, lam_max):
        # type: (float) -> int
        return int(math.ceil(self.n_base * (1.0 + math.sqrt(abs(lam_max)) / math.pi)))

    def _monodromy(self, flat):
        # type: (Array) -> Array
        out = np.empty((flat.size, 4, 4))
        order = np.argsort(np.abs(flat))
        i = 0
        while i < flat.size:
            guess = self.step_count(flat[order[i]])
            idx = order[i:i + max(1, CHUNK // guess)]
            steps = self.step_count(np.max(np.abs(flat[idx])))
            h = self.period / steps
            P = _rk4_propagators(_potential_samples(self.q, steps), flat[idx], h)
            out[idx] = _ordered_product(P)
            i += len(idx)
        return out

    def calibrate(self, probe):
        # type: (float) -> int
        """Double n_base until Δ(probe) moves by less than hill_probe_tol.

        The size of the last accepted move is kept as `noise`, the absolute
        accuracy of Δ at the chosen resolution.
        """
        clock = timer()
        tol = self.settings["hill_probe_tol"]
        doublings = 0
        coarse = self._delta(np.array([probe]))[0]
        floor = noise = tol * max(1.0, abs(coarse))
        for doublings in range(1, self.settings["hill_max_doublings"] + 1):
            self.n_base *= 2
            fine = self._delta(np.array([probe]))[0]
            change = abs(fine - coarse)
            if change < tol * max(1.0, abs(fine)):
                self.n_base //= 2
                noise = max(floor, change)
                break
            # RK4 error of the finer run
            noise = max(floor, change / 15.0)
            coarse = fine
        self.noise = noise
        self._calibrated = True
        util.debug.log_solver(
            "hill_calibrate", clock.elapsed(), probe=probe, n_base=self.n_base,
            doublings=doublings, noise=noise)
        return self.n_base

    def _delta(self, flat):
        # type: (Array) -> Array
        M = self._monodromy(flat)
        return M[:, 0, 0] + M[:, 1, 1]

    def _ensure_calibrated(self):
        # type: () -> None
        with self._lock:
            if not self._calibrated:
                K = self.settings["K"]
                self.calibrate((math.pi * (K + 1) / self.period) ** 2)

    def noise_level(self):
        # type: () -> float
        """Absolute accuracy of Δ reached by the calibrated step count."""
        self._ensure_calibrated()
        return self.noise

    def monodromy(self, lam):
        # type: (Union[float, Array]) -> Array
        """The 4×4 propagator of (y, y', ∂_λy, ∂_λy') over one period."""
        self._ensure_calibrated()
        lam = np.asarray(lam, dtype=float)
        return self._monodromy(lam.ravel()).reshape(lam.shape + (4, 4))

    def discriminant(self, lam):
        # type: (Union[float, Array]) -> Tuple[Array, Array]
        M = self.monodromy(lam)
        return M[..., 0, 0] + M[..., 1, 1], M[..., 2, 0] + M[..., 3, 1]

    def wronskian(self, lam):
        # type: (Union[float, Array]) -> Array
        M = self.monodromy(lam)
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 1, 0] * M[..., 0, 1]


def hill_operator(q, settings=None):
    # type: (FourierProfile, Optional[SpectraSettings]) -> HillOperator
    settings = settings_or_default(settings)
    key = ("hill", q, settings["hill_n_base"], settings["hill_probe_tol"], settings["K"])
    return store.cached(key, lambda: HillOperator(q, settings))


def hill_discriminant(q, lam, settings=None):
    # type: (FourierProfile, Union[float, Array], Optional[SpectraSettings]) -> Tuple[Union[float, Array], Union[float, Array]]
    """Δ(λ) = y₁(T) + y₂'(T) and Δ̇(λ)."""
    delta, delta_dot = hill_operator(q, settings).discriminant(lam)
    if np.ndim(lam) == 0:
        return float(delta), float(delta_dot)
    return delta, delta_dot


def wronskian(q, lam, settings=None):
    # type: (FourierProfile, Union[float, Array], Optional[SpectraSettings]) -> Union[float, Array]
    value = hill_operator(q, settings).wronskian(lam)
    return float(value) if np.ndim(lam) == 0 else value


def _hill_sign(n):
    # type: (Union[int, Array]) -> Union[int, Array]
    """(−1)^n: the sign of Δ on gap n."""
    return 1 - 2 * (np.asarray(n) % 2)


def _dot_zero_brackets(op, lo, count, refinements):
    # type: (HillOperator, float, int, int) -> Tuple[Array, Array]
    unit = math.pi / op.period
    u = np.arange(1, 16 * count + 9) / 16.0
    grid = np.concatenate((np.linspace(lo, 0.0, 9)[:-1], (unit * u) ** 2))
    found = 0
    for _ in range(refinements + 1):
        _, slope = op.discriminant(grid)
        sign = np.where(slope >= 0, 1, -1)
        changes = np.flatnonzero(sign[:-1] != sign[1:])
        found = len(changes)
        if found >= count:
            changes = changes[:count]
            return grid[changes], grid[changes + 1]
        grid = np.sort(np.concatenate((grid, 0.5 * (grid[:-1] + grid[1:]))))
    raise exceptions.BracketFailure(
        "isolated {} of the {} zeros of the Hill discriminant's derivative".format(found, count),
        details={"count": count})


def hill_eigenvalues(q, K=None, settings=None):
    # type: (FourierProfile, Optional[int], Optional[SpectraSettings]) -> HillSpectrum
    """λ_0 < λ_1 ≤ λ_2 < … ≤ λ_{2K}, the first 2K + 1 roots of Δ² = 4."""
    settings = settings_or_default(settings)
    K = int(settings["K"] if K is None else K)
    if K < 1:
        raise ValueError("K must be >= 1, got {}".format(K))
    clock = timer()
    op = hill_operator(q, settings)
    lo = float(np.min(q(np.linspace(0.0, q.period, 513)))) - 1.0

    # K + 1 zeros of Δ̇ so that the last gap's upper edge is bracketed too
    gaps = np.arange(1, K + 2)
    left, right = _dot_zero_brackets(op, lo, K + 1, settings["bracket_refinements"])

    def slope(x, _):
        return op.discriminant(x)[1]

    dot, _, _ = bisect(slope, left, right, DOT_XTOL, indices=gaps, what="Hill critical point")
    s = _hill_sign(gaps)
    excess = s * op.discriminant(dot)[0] / 2.0 - 1.0
    closed = excess <= settings["hill_excess_floor"]

    ext = np.concatenate(([lo], dot))
    resolved = gaps[:K]
    open_gaps = resolved[~closed[:K]]
    target = np.concatenate(([1], s[open_gaps - 1], s[open_gaps - 1])).astype(float)
    lower = np.concatenate(([lo], ext[open_gaps - 1], ext[open_gaps]))
    upper = np.concatenate(([ext[1]], ext[open_gaps], ext[open_gaps + 1]))
    labels = np.concatenate(([0], open_gaps, open_gaps))

    def level_d(x, which):
        delta, delta_dot = op.discriminant(x)
        return target[which] * delta - 2.0, target[which] * delta_dot

    edges = safeguarded_newton(
        level_d, lower, upper, settings["xtol"], settings["newton_max_iter"],
        indices=labels, what="Hill band edge")

    lam = np.empty(2 * K + 1)
    lam[0] = edges[0]
    lam[1::2] = dot[:K]
    lam[2::2] = dot[:K]
    count = len(open_gaps)
    lam[2 * open_gaps - 1] = edges[1:1 + count]
    lam[2 * open_gaps] = edges[1 + count:]

    dot, excess, closed = dot[:K], np.maximum(excess[:K], 0.0), closed[:K].copy()
    gap_len = lam[2::2] - lam[1::2]
    closed |= gap_len < settings["hill_degeneracy_eps"]
    lam[2 * resolved[closed] - 1] = dot[closed]
    lam[2 * resolved[closed]] = dot[closed]
    gap_len = np.where(closed, 0.0, lam[2::2] - lam[1::2])
    if np.any(np.diff(lam) < 0):
        bad = int(np.flatnonzero(np.diff(lam) < 0)[0])
        raise exceptions.BracketFailure(
            "Hill eigenvalues {} and {} are out of order".format(bad, bad + 1), n=(bad + 1) // 2)

    tau = 0.5 * (lam[1::2] + lam[2::2])
    for array in (lam, gap_len, tau, dot, closed, excess):
        array.setflags(write=False)
    util.debug.log_solver(
        "hill_spectrum", clock.elapsed(), K=K, open_gaps=int(np.sum(~closed)), n_base=op.n_base)
    return HillSpectrum(K, q.period, lam, gap_len, tau, dot, closed, excess)


def kdv_actions(q, spectrum, settings=None):
    # type: (FourierProfile, HillSpectrum, Optional[SpectraSettings]) -> Array
    """I_n = (2/π)∫_{gap n} arcosh((−1)^n Δ(λ)/2) dλ for n = 1..K."""
    settings = settings_or_default(settings)
    op = hill_operator(q, settings)
    clock = timer()

    def one(n):
        if spectrum.closed[n - 1]:
            return 0.0
        sign = _hill_sign(n)
        half = 0.5 * spectrum.gap_len[n - 1]
        # noise η in Δ moves I_n by about η·half/√(2·excess) on a narrow gap
        atol = NOISE_MARGIN * op.noise_level() * half / math.sqrt(
            2.0 * max(spectrum.excess[n - 1], settings["hill_excess_floor"]))

        def estimate(count):
            t = chebyshev_nodes(count)
            delta, _ = op.discriminant(spectrum.tau[n - 1] + half * t)
            excess = sign * delta / 2.0 - 1.0
            if np.min(excess) < -1e-10:
                raise exceptions.NegativeArcoshArgument(
                    "arcosh argument fell below 1 inside Hill gap {}".format(n), n=n)
            return 2.0 * np.mean(arcosh1p(excess) * half * np.sqrt(1.0 - t * t))

        value, _ = adaptive(
            estimate, settings["min_nodes"], settings["max_nodes"], settings["quad_tol"],
            what="KdV action", n=n, atol=atol)
        return max(float(value), 0.0)

    I = np.array(parallel_map(one, range(1, spectrum.K + 1)))
    I.setflags(write=False)
    util.debug.log_solver("kdv_actions", clock.elapsed(), K=spectrum.K)
    return I


def kdv_j_quotients(actions, spectrum):
    # type: (Array, HillSpectrum) -> Array
    """J_n = I_n/(2γ_n), and 0 on closed gaps."""
    I = np.asarray(actions, dtype=float)
    closed = np.asarray(spectrum.closed) | (spectrum.gap_len <= 0)
    return np.where(closed, 0.0, I / np.where(closed, 1.0, 2.0 * spectrum.gap_len))


def _quotient_log(spectrum, sigma, n, distance, skip=0, own=True, keep=None):
    # type: (HillSpectrum, Array, GapIndex, Callable[[Array], Array], int, bool, Optional[Array]) -> Array
    """log of (nπ/T)/√|λ−λ_0| · 1/|w_n| · Π_{ℓ≠n, skip} |σ_ℓ−λ|/|w_ℓ(λ)|.

    Closed gaps contribute factors of exactly one.  `own=False` drops
    1/|w_n|, `keep` masks the open foreign gaps whose factors enter.
    """
    lam = spectrum.lam
    foreign = np.array(
        [ell for ell in range(1, spectrum.K + 1) if ell not in (n, skip)], dtype=int)
    gaps = foreign[~spectrum.closed[foreign - 1]]
    if keep is not None:
        gaps = gaps[keep[gaps - 1]]
    points = np.concatenate((
        [lam[0]],
        [lam[2 * n - 1], lam[2 * n]] if own else [],
        np.asarray(sigma)[gaps - 1],
        lam[2 * gaps - 1],
        lam[2 * gaps],
    ))
    logs = np.log(distance(points))
    start = 3 if own else 1
    count = len(gaps)
    return (
        math.log(n * math.pi / spectrum.period)
        - 0.5 * np.sum(logs[:, :start], axis=-1)
        + np.sum(logs[:, start:start + count], axis=-1)
        - 0.5 * np.sum(logs[:, start + count:], axis=-1)
    )


def _tail_mask(spectrum, K_sigma, tol):
    # type: (HillSpectrum, int, float) -> Array
    """Open gaps ℓ > K_sigma whose factor |τ_ℓ−λ|/|w_ℓ(λ)| still differs from
    one by at least tol somewhere below the upper edge of gap K_sigma.
    """
    keep = np.ones(spectrum.K, dtype=bool)
    reach = spectrum.lam[2 * K_sigma]
    for ell in range(K_sigma + 1, spectrum.K + 1):
        if spectrum.closed[ell - 1]:
            continue
        ratio = 0.5 * spectrum.gap_len[ell - 1] / (spectrum.tau[ell - 1] - reach)
        keep[ell - 1] = 0.5 * ratio * ratio >= tol
    return keep


def _gap_distance(spectrum, m, t):
    # type: (HillSpectrum, GapIndex, Array) -> Callable[[Array], Array]
    tau = spectrum.tau[m - 1]
    half = 0.5 * spectrum.gap_len[m - 1]
    mu = tau + half * t
    lower, upper = spectrum.lam[2 * m - 1], spectrum.lam[2 * m]

    def distance(points):
        points = np.asarray(points, dtype=float)
        # node distances to the gap's own edges are formed without cancellation
        exact = np.where(
            points == lower, half * (1.0 + t)[:, None],
            np.where(points == upper, half * (1.0 - t)[:, None], 0.0))
        return np.where(
            (points == lower) | (points == upper), exact, np.abs(mu[:, None] - points))

    return distance


def kdv_psi(q, spectrum, n, K_sigma=None, settings=None):
    # type: (FourierProfile, HillSpectrum, GapIndex, Optional[int], Optional[SpectraSettings]) -> KdvDifferential
    """Zeros σ_ℓ of ψ_n from the vanishing cycle conditions, and ψ_n's normalization."""
    settings = settings_or_default(settings)
    K_sigma = min(int(settings["K_sigma"] if K_sigma is None else K_sigma), spectrum.K)
    if not 1 <= n <= K_sigma:
        raise ValueError("psi index must lie in 1..{}, got {}".format(K_sigma, n))
    key = ("kdv_psi", q, spectrum.lam.tobytes(), n, K_sigma) + tuple(
        settings[name] for name in PSI_SETTINGS)
    return store.cached(key, lambda: _solve_psi(spectrum, n, K_sigma, settings))


def _solve_psi(spectrum, n, K_sigma, settings):
    # type: (HillSpectrum, GapIndex, int, SpectraSettings) -> KdvDifferential
    clock = timer()
    sigma = np.array(spectrum.tau, dtype=float)
    keep = _tail_mask(spectrum, K_sigma, settings["tail_tol"])
    unknowns = np.array([
        m for m in range(1, K_sigma + 1) if m != n and not spectrum.closed[m - 1]
    ], dtype=int)
    t = chebyshev_nodes(NEWTON_NODES)
    lower = spectrum.lam[2 * unknowns - 1]
    upper = spectrum.lam[2 * unknowns]

    trace = []
    newton_residual = 0.0
    size = len(unknowns)
    for _ in range(settings["newton_max_iter"]):
        F = np.zeros(size)
        scale = np.zeros(size)
        jacobian = np.zeros((size, size))
        for i, m in enumerate(unknowns):
            mu = spectrum.tau[m - 1] + 0.5 * spectrum.gap_len[m - 1] * t
            Q = np.exp(_quotient_log(
                spectrum, sigma, n, _gap_distance(spectrum, m, t), skip=m, keep=keep))
            diff = sigma[m - 1] - mu
            F[i] = np.mean(diff * Q)
            scale[i] = 0.5 * spectrum.gap_len[m - 1] * np.mean(Q)
            jacobian[i, i] = np.mean(Q)
            for j, ell in enumerate(unknowns):
                if ell != m:
                    jacobian[i, j] = np.mean(diff * Q / (sigma[ell - 1] - mu))
        newton_residual = float(np.max(np.abs(F) / scale)) if size else 0.0
        trace.append(newton_residual)
        if newton_residual < settings["newton_tol"]:
            break
        try:
            step = np.linalg.solve(jacobian, -F)
        except np.linalg.LinAlgError as e:
            raise exceptions.NewtonDivergence(
                "psi_{} zero system is singular: {}".format(n, e), n=n,
                details={"iterations": len(trace)})
        sigma[unknowns - 1] = np.clip(sigma[unknowns - 1] + step, lower, upper)
    else:
        raise exceptions.NewtonDivergence(
            "psi_{} zeros did not settle after {} iterations".format(n, len(trace)), n=n,
            details={"iterations": len(trace), "residual": newton_residual})

    normalization = _normalization(spectrum, sigma, n, keep, settings)
    sigma.setflags(write=False)
    util.debug.log_solver(
        "kdv_psi", clock.elapsed(), n=n, unknowns=size, iterations=len(trace),
        residual="{:.3g}".format(newton_residual))
    return KdvDifferential(
        n, sigma, normalization, abs(normalization - 1.0), newton_residual, len(trace))


def _normalization(spectrum, sigma, n, keep, settings):
    # type: (HillSpectrum, Array, GapIndex, Array, SpectraSettings) -> float
    if spectrum.closed[n - 1]:
        tau = np.array([spectrum.tau[n - 1]])

        def at_tau(points):
            return np.abs(tau[:, None] - points)

        return float(np.exp(_quotient_log(spectrum, sigma, n, at_tau, own=False, keep=keep))[0])

    def estimate(count):
        t = chebyshev_nodes(count)
        distance = _gap_distance(spectrum, n, t)
        return np.mean(np.exp(_quotient_log(spectrum, sigma, n, distance, own=False, keep=keep)))

    value, _ = adaptive(
        estimate, settings["min_nodes"], settings["max_nodes"], settings["quad_tol"],
        what="psi normalization", n=n)
    return float(value)


def _hill_band_edges(spectrum, j):
    # type: (HillSpectrum, BandIndex) -> Tuple[float, float]
    return spectrum.lam[2 * j - 2], spectrum.lam[2 * j - 1]


def kdv_band_integrals_first_kind(q, spectrum, n_max=None, settings=None):
    # type: (FourierProfile, HillSpectrum, Optional[int], Optional[SpectraSettings]) -> Array
    """W_j = ∫_{band j} λΔ̇/(i√[c]{Δ² − 4}) dλ for j = 1..n_max.

    Integrated by parts with Θ = arccos((−1)^j Δ/2), which runs from π down
    to 0 across band j, this is −π·λ_{2j−2} − ∫ Θ dλ.
    """
    settings = settings_or_default(settings)
    n_max = min(int(settings["n_max"] if n_max is None else n_max), spectrum.K)
    op = hill_operator(q, settings)

    def one(j):
        lower, upper = _hill_band_edges(spectrum, j)
        sign = _hill_sign(j)

        def estimate(order):
            nodes = band_rule(lower, upper, order, graded=False)
            delta, _ = op.discriminant(nodes.mu)
            angle = np.arccos(np.clip(sign * delta / 2.0, -1.0, 1.0))
            return np.sum(angle * nodes.weights)

        area, _ = adaptive(
            estimate, 16, 1024, settings["quad_tol"], what="Hill band arccos", n=j,
            atol=NOISE_MARGIN * op.noise_level() * (upper - lower))
        return -math.pi * lower - area

    values = np.array(parallel_map(one, range(1, n_max + 1)))
    values.setflags(write=False)
    return values


def _band_quotients(spectrum, psi, j, settings):
    # type: (HillSpectrum, KdvDifferential, BandIndex, SpectraSettings) -> float
    """∫_{band j} ψ_k/(i√[c]{Δ² − 4}) dλ for the normalized ψ_k of `psi`."""
    k = psi.n
    lower, upper = _hill_band_edges(spectrum, j)
    sign = 1.0 if k >= j else -1.0

    def estimate(order):
        nodes = band_rule(lower, upper, order)

        def distance(points):
            return band_distance(nodes, lower, upper, points)

        values = np.exp(_quotient_log(spectrum, psi.sigma, k, distance))
        return np.sum(values * nodes.weights)

    value, _ = adaptive(estimate, 8, 256, settings["quad_tol"], what="psi band integral", n=j)
    return sign * value / psi.normalization


def kdv_frequencies(q, spectrum, actions, K=None, settings=None):
    # type: (FourierProfile, HillSpectrum, Array, Optional[int], Optional[SpectraSettings]) -> Array
    """ω_n for n = 1..n_max:

        −48·Σ_{j≤n} W_j + 24·Σ_k I_k·Σ_{j≤n} ∫_{band j} ψ_k/(i√[c]{Δ² − 4}) dλ

    with k over the gaps ≤ K carrying a nonzero action.  The zeros of ψ_k are
    solved over the first max(K_sigma, k) gaps.
    """
    settings = settings_or_default(settings)
    clock = timer()
    K = min(int(settings["K"] if K is None else K), spectrum.K)
    n_max = min(int(settings["n_max"]), K)
    W = kdv_band_integrals_first_kind(q, spectrum, n_max, settings)
    omega = -48.0 * np.cumsum(W)

    I = np.asarray(actions, dtype=float)
    K_sigma = min(int(settings["K_sigma"]), K)
    active = [k for k in range(1, K + 1) if I[k - 1] > 0 and not spectrum.closed[k - 1]]
    for k in active:
        psi = kdv_psi(q, spectrum, k, max(K_sigma, k), settings)
        per_band = np.array([
            _band_quotients(spectrum, psi, j, settings) for j in range(1, n_max + 1)
        ])
        omega = omega + 24.0 * I[k - 1] * np.cumsum(per_band)

    util.debug.log_solver(
        "kdv_frequencies", clock.elapsed(), n_max=n_max, active=len(active))
    omega.setflags(write=False)
    return omega


def hkdv_reference(N, n, omega_kdv):
    # type: (int, int, float) -> float
    """2πn/N − (1/24)·(2N)⁻³·ω, the frequency of ℋ^N_KdV."""
    return 2.0 * math.pi * n / N - omega_kdv / (24.0 * (2.0 * N) ** 3)
