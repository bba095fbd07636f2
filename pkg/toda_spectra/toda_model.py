"""Toda states built from smooth profiles, their mirror images and the Lax flow."""
from collections import namedtuple
import math

import numpy as np

from .common import util
from .core import exceptions
from .core.utils import timer


__all__ = (
    "FourierProfile",
    "TodaState",
    "LaxPair",
    "TrajectorySample",
    "make_state",
    "equilibrium_state",
    "discretize",
    "discretize_pq",
    "reflect",
    "reflect_profiles",
    "potentials",
    "lax_matrices",
    "evolve_lax",
)

MYPY = False
if MYPY:
    from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple
    from .core.types import Array
    TodaState = NamedTuple("TodaState", [
        ("N", int),
        ("b", Array),
        ("a", Array),
        ("trace_p", float),   # Σ b_n
        ("prod_q", float),    # Π a_n
    ])
    LaxPair = NamedTuple("LaxPair", [("L", Array), ("B", Array)])
    TrajectorySample = NamedTuple("TrajectorySample", [("t", float), ("state", TodaState)])
else:
    TodaState = namedtuple("TodaState", "N b a trace_p prod_q")
    LaxPair = namedtuple("LaxPair", "L B")
    TrajectorySample = namedtuple("TrajectorySample", "t state")


class FourierProfile(namedtuple("FourierProfile", "cos sin period")):
    """Mean-zero trigonometric polynomial

        f(x) = Σ_k cos[k-1]·cos(2πkx/period) + sin[k-1]·sin(2πkx/period)

    for k = 1..K.
    """
    __slots__ = ()

    def __new__(cls, cos=(), sin=(), period=1.0):
        cos = tuple(float(c) for c in cos)
        sin = tuple(float(s) for s in sin)
        size = max(len(cos), len(sin))
        cos += (0.0,) * (size - len(cos))
        sin += (0.0,) * (size - len(sin))
        if not all(math.isfinite(v) for v in cos + sin):
            raise ValueError("profile coefficients must be finite")
        if period <= 0:
            raise ValueError("profile period must be positive, got {}".format(period))
        return super().__new__(cls, cos, sin, float(period))

    @classmethod
    def zero(cls, period=1.0):
        # type: (float) -> FourierProfile
        return cls((), (), period)

    @classmethod
    def from_triples(cls, triples, period=1.0):
        # type: (Iterable[Sequence[float]], float) -> FourierProfile
        """Build from [k, cos_coeff, sin_coeff] entries; repeated k add up."""
        cos = {}  # type: dict
        sin = {}  # type: dict
        for entry in triples:
            if len(entry) != 3:
                raise ValueError("profile entries are [k, cos, sin], got {!r}".format(entry))
            k, c, s = entry
            if int(k) != k or k < 1:
                raise ValueError("profile mode k must be a positive integer, got {!r}".format(k))
            k = int(k)
            cos[k] = cos.get(k, 0.0) + float(c)
            sin[k] = sin.get(k, 0.0) + float(s)
        size = max(cos, default=0)
        return cls(
            [cos.get(k, 0.0) for k in range(1, size + 1)],
            [sin.get(k, 0.0) for k in range(1, size + 1)],
            period,
        )

    @property
    def K(self):
        # type: () -> int
        return len(self.cos)

    def is_zero(self):
        # type: () -> bool
        return not any(self.cos) and not any(self.sin)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if not self.K:
            return np.zeros_like(x)
        k = np.arange(1, self.K + 1)
        phase = 2 * np.pi * np.multiply.outer(x, k) / self.period
        return np.cos(phase) @ np.array(self.cos) + np.sin(phase) @ np.array(self.sin)

    def antiderivative(self):
        # type: () -> FourierProfile
        """The mean-zero ξ with ξ' = f."""
        k = np.arange(1, self.K + 1)
        freq = 2 * np.pi * k / self.period
        return FourierProfile(-np.array(self.sin) / freq, np.array(self.cos) / freq, self.period)

    def derivative(self):
        # type: () -> FourierProfile
        k = np.arange(1, self.K + 1)
        freq = 2 * np.pi * k / self.period
        return FourierProfile(np.array(self.sin) * freq, -np.array(self.cos) * freq, self.period)

    def mirrored(self):
        # type: () -> FourierProfile
        """x ↦ f(−x)."""
        return FourierProfile(self.cos, [-s for s in self.sin], self.period)

    def scaled(self, factor):
        # type: (float) -> FourierProfile
        return FourierProfile(
            [factor * c for c in self.cos], [factor * s for s in self.sin], self.period)

    def plus(self, other):
        # type: (FourierProfile) -> FourierProfile
        if other.period != self.period:
            raise ValueError("cannot add profiles of different periods")
        size = max(self.K, other.K)
        pad = lambda v: list(v) + [0.0] * (size - len(v))  # noqa: E731
        return FourierProfile(
            np.add(pad(self.cos), pad(other.cos)),
            np.add(pad(self.sin), pad(other.sin)),
            self.period,
        )

    def at_double_frequency(self):
        # type: () -> FourierProfile
        """x ↦ f(2x), which has half the period."""
        return FourierProfile(self.cos, self.sin, self.period / 2)


def _frozen(values):
    # type: (Iterable[float]) -> Array
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


def make_state(b, a):
    # type: (Sequence[float], Sequence[float]) -> TodaState
    b = _frozen(b)
    a = _frozen(a)
    if b.shape != a.shape or b.ndim != 1:
        raise ValueError("b and a must be vectors of equal length")
    N = len(b)
    if N < 3:
        raise ValueError("a Toda chain needs N >= 3 particles, got {}".format(N))
    bad = np.flatnonzero(~(a > 0))
    if len(bad):
        n = int(bad[0]) + 1
        raise exceptions.NonPositiveA(
            "a_{} = {!r} is not positive".format(n, float(a[n - 1])), n=n)
    return TodaState(N, b, a, float(np.sum(b)), float(np.prod(a)))


def equilibrium_state(N, s=1.0, r=0.0):
    # type: (int, float, float) -> TodaState
    return make_state(np.full(N, float(r)), np.full(N, float(s)))


def _sample_points(N):
    # type: (int) -> Array
    return np.arange(1, N + 1) / N


def discretize(alpha, beta, N):
    # type: (FourierProfile, FourierProfile, int) -> TodaState
    if N < 3:
        raise ValueError("a Toda chain needs N >= 3 particles, got {}".format(N))
    x = _sample_points(N)
    scale = 4.0 * N * N
    return make_state(beta(x) / scale, 1.0 + alpha(x) / scale)


def discretize_pq(alpha, beta, N):
    # type: (FourierProfile, FourierProfile, int) -> TodaState
    """Variant built from the positions q_n = −(2/4N)·ξ(n/N), ξ' = α."""
    if N < 3:
        raise ValueError("a Toda chain needs N >= 3 particles, got {}".format(N))
    x = _sample_points(N)
    q = -(2.0 / (4.0 * N)) * alpha.antiderivative()(x)
    c = np.exp((q - np.roll(q, -1)) / 2.0)
    return make_state(beta(x) / (4.0 * N * N), c)


def reflect(state):
    # type: (TodaState) -> TodaState
    """b̃_n = −b_{N−n}, ã_n = a_{N−1−n}, indices taken mod N."""
    i = np.arange(state.N)
    return make_state(
        -state.b[(state.N - i - 2) % state.N],
        state.a[(state.N - i - 3) % state.N],
    )


def reflect_profiles(alpha, beta):
    # type: (FourierProfile, FourierProfile) -> Tuple[FourierProfile, FourierProfile]
    """α̃(x) = α(−x), β̃(x) = −β(−x)."""
    return alpha.mirrored(), beta.mirrored().scaled(-1.0)


def potentials(alpha, beta):
    # type: (FourierProfile, FourierProfile) -> Tuple[FourierProfile, FourierProfile]
    """q±(x) = −2α(2x) ∓ β(2x), of period ½."""
    edge = alpha.scaled(-2.0).at_double_frequency()
    wave = beta.at_double_frequency()
    return edge.plus(wave), edge.plus(wave.scaled(-1.0))


def _l_matrix(b, a):
    # type: (Array, Array) -> Array
    N = len(b)
    L = np.diag(np.asarray(b, dtype=float))
    i = np.arange(N - 1)
    L[i, i + 1] = L[i + 1, i] = a[:-1]
    L[0, N - 1] = L[N - 1, 0] = a[-1]
    return L


def _b_matrix(a):
    # type: (Array) -> Array
    N = len(a)
    B = np.zeros((N, N))
    i = np.arange(N - 1)
    B[i, i + 1] = a[:-1]
    B[i + 1, i] = -a[:-1]
    B[0, N - 1] = -a[-1]
    B[N - 1, 0] = a[-1]
    return B


def _coefficients_of(L):
    # type: (Array) -> Tuple[Array, Array]
    N = len(L)
    i = np.arange(N - 1)
    a = np.empty(N)
    a[:-1] = L[i, i + 1]
    a[-1] = L[0, N - 1]
    return np.diag(L).copy(), a


def lax_matrices(state):
    # type: (TodaState) -> LaxPair
    L = _l_matrix(state.b, state.a)
    B = _b_matrix(state.a)
    L.setflags(write=False)
    B.setflags(write=False)
    return LaxPair(L, B)


def _lax_field(L):
    # type: (Array) -> Array
    _, a = _coefficients_of(L)
    B = _b_matrix(a)
    return B @ L - L @ B


def evolve_lax(state, t_final, dt, sample_every=None):
    # type: (TodaState, float, float, Optional[int]) -> List[TrajectorySample]
    """Integrate dL/dt = BL − LB with the classical RK4 scheme.

    After every step L is symmetrized and (b, a) re-read from it.  The
    initial and the final state are always part of the returned samples;
    with `sample_every` every that many steps are recorded as well.
    """
    if dt <= 0:
        raise ValueError("dt must be positive, got {}".format(dt))
    if t_final < 0:
        raise ValueError("t_final must be >= 0, got {}".format(t_final))
    clock = timer()
    steps = int(math.ceil(t_final / dt - 1e-9)) if t_final > 0 else 0
    h = t_final / steps if steps else 0.0
    samples = [TrajectorySample(0.0, state)]
    L = _l_matrix(state.b, state.a)
    current = state
    for step in range(1, steps + 1):
        k1 = _lax_field(L)
        k2 = _lax_field(L + 0.5 * h * k1)
        k3 = _lax_field(L + 0.5 * h * k2)
        k4 = _lax_field(L + h * k3)
        L = L + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        L = 0.5 * (L + L.T)
        b, a = _coefficients_of(L)
        if np.any(a <= 0):
            n = int(np.flatnonzero(a <= 0)[0]) + 1
            raise exceptions.StepRejected(
                "a_{} left the positive range at t={:.6g}".format(n, step * h),
                n=n, details={"t": step * h, "a": float(a[n - 1])})
        current = make_state(b, a)
        L = _l_matrix(current.b, current.a)
        if step == steps or (sample_every and step % sample_every == 0):
            samples.append(TrajectorySample(step * h, current))

    util.debug.log_solver(
        "lax_flow", clock.elapsed(), N=state.N, steps=steps, dt=h, t_final=t_final)
    return samples
