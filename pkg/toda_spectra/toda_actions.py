"""Action variables of the periodic Toda chain."""
from collections import namedtuple

import numpy as np

from .common import util
from .core import exceptions
from .core.quadrature import adaptive, chebyshev_nodes
from .core.runtime import parallel_map
from .core.settings import settings_or_default
from .core.utils import timer
from .jacobi_spectral import gap_samples


__all__ = (
    "ActionSet",
    "actions_arcosh",
    "actions_moment",
    "j_quotients",
    "arcosh1p",
)

MYPY = False
if MYPY:
    from typing import Callable, NamedTuple, Optional
    from .core.settings import SpectraSettings
    from .core.types import Array, GapIndex
    from .jacobi_spectral import SpectrumN
    from .toda_model import TodaState
    ActionSet = NamedTuple("ActionSet", [
        ("I", Array),    # I_n, n = 1..N−1
        ("J", Array),    # I_n / γ_n, 0 on closed gaps
    ])
else:
    ActionSet = namedtuple("ActionSet", "I J")


ARCOSH_SLACK = 1e-10
SERIES_LIMIT = 1e-8


def arcosh1p(excess):
    # type: (Array) -> Array
    """arcosh(1 + e) for e ≥ 0, switching to the series in √(2e) near 0."""
    e = np.maximum(np.asarray(excess, dtype=float), 0.0)
    root = np.sqrt(2.0 * e)
    series = root * (1.0 - e / 12.0 + 3.0 * e * e / 160.0)
    with np.errstate(invalid="ignore"):
        direct = np.log1p(e + np.sqrt(e * (2.0 + e)))
    return np.where(e < SERIES_LIMIT, series, direct)


def _check_excess(excess, n):
    # type: (Array, GapIndex) -> None
    worst = float(np.min(excess))
    if worst < -ARCOSH_SLACK:
        raise exceptions.NegativeArcoshArgument(
            "arcosh argument fell to 1{:+.3g} inside gap {}".format(worst, n), n=n)


def _gap_action(state, spectrum, n, settings, integrand, what):
    # type: (TodaState, SpectrumN, GapIndex, SpectraSettings, Callable, str) -> float
    if spectrum.closed[n - 1]:
        return 0.0

    def estimate(count):
        t = chebyshev_nodes(count)
        samples = gap_samples(state, spectrum, n, t, settings)
        return np.mean(integrand(samples, t))

    value, _ = adaptive(
        estimate, settings["min_nodes"], settings["max_nodes"], settings["quad_tol"],
        what=what, n=n)
    return max(float(value), 0.0)


def _action_set(spectrum, I):
    # type: (SpectrumN, Array) -> ActionSet
    I = np.asarray(I, dtype=float)
    I.setflags(write=False)
    J = j_quotients(I, spectrum)
    J.setflags(write=False)
    return ActionSet(I, J)


def actions_arcosh(state, spectrum, settings=None):
    # type: (TodaState, SpectrumN, Optional[SpectraSettings]) -> ActionSet
    """I_n = (1/π)∫_{gap n} arcosh((−1)^{N−n}Δ_N(μ)/2) dμ."""
    settings = settings_or_default(settings)
    clock = timer()

    def one(n):
        half = 0.5 * spectrum.gap_len[n - 1]

        def integrand(samples, t):
            _check_excess(samples.excess, n)
            # dμ/√((μ−λ_{2n−1})(λ_{2n}−μ)) absorbs one factor half·√(1 − t²)
            return arcosh1p(samples.excess) * half * np.sqrt(1.0 - t * t)

        return _gap_action(state, spectrum, n, settings, integrand, "arcosh action")

    I = parallel_map(one, range(1, spectrum.N))
    util.debug.log_solver("actions_arcosh", clock.elapsed(), N=spectrum.N)
    return _action_set(spectrum, I)


def actions_moment(state, spectrum, settings=None):
    # type: (TodaState, SpectrumN, Optional[SpectraSettings]) -> ActionSet
    """I_n = (1/π)∫_{gap n} (μ − λ̇_n)·Δ̇_N / √[c]{Δ_N² − 4}(μ − i0) dμ."""
    settings = settings_or_default(settings)
    clock = timer()
    N = spectrum.N

    def one(n):
        dot = spectrum.dot_lambda[n - 1]
        sign = (-1) ** (N + 1 - n)

        def integrand(samples, _):
            _check_excess(samples.excess, n)
            return sign * (samples.mu - dot) * samples.delta_dot / np.sqrt(samples.ratio)

        return _gap_action(state, spectrum, n, settings, integrand, "moment action")

    I = parallel_map(one, range(1, N))
    util.debug.log_solver("actions_moment", clock.elapsed(), N=N)
    return _action_set(spectrum, I)


def j_quotients(actions, spectrum):
    # type: (object, SpectrumN) -> Array
    """J_n = I_n/γ_n, and 0 on closed gaps."""
    I = np.asarray(getattr(actions, "I", actions), dtype=float)
    gap_len = np.asarray(spectrum.gap_len, dtype=float)
    closed = np.asarray(spectrum.closed) | (gap_len <= 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(closed, 0.0, I / np.where(closed, 1.0, gap_len))
