"""Vectorized bracketed root finders.

All solvers work on arrays of independent brackets at once. Callables are
invoked as `fn(x, index)` where `index` holds the bracket numbers of the
abscissae `x` still being refined.
"""
import numpy as np

from ..common import util
from . import exceptions
from .utils import timer


MYPY = False
if MYPY:
    from typing import Callable, Optional, Sequence, Tuple
    Array = np.ndarray
    Fn = Callable[[Array, Array], Array]
    FnWithDerivative = Callable[[Array, Array], Tuple[Array, Array]]


def _sgn(values):
    # type: (Array) -> Array
    return np.where(values >= 0, 1, -1)


def check_brackets(f_lo, f_hi, indices=None, what="root"):
    # type: (Array, Array, Optional[Sequence[int]], str) -> None
    bad = (_sgn(f_lo) == _sgn(f_hi)) & (f_lo != 0) & (f_hi != 0)
    if np.any(bad):
        first = int(np.flatnonzero(bad)[0])
        n = int(indices[first]) if indices is not None else first
        raise exceptions.BracketFailure(
            "{} not isolated by its bracket (n={})".format(what, n),
            n=n, details={"f_lo": float(f_lo[first]), "f_hi": float(f_hi[first])}
        )


def bisect(fn, lo, hi, xtol=1e-13, max_iter=200, indices=None, what="root"):
    # type: (Fn, Array, Array, float, int, Optional[Sequence[int]], str) -> Tuple[Array, Array, Array]
    """Bisect every bracket [lo, hi] until |hi - lo| < xtol·(1 + |x|).

    Returns the midpoints and the final brackets.
    """
    clock = timer()
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    everything = np.arange(len(lo))
    f_lo = np.asarray(fn(lo, everything), dtype=float)
    f_hi = np.asarray(fn(hi, everything), dtype=float)
    check_brackets(f_lo, f_hi, indices, what)

    # exact hits collapse their bracket
    hit_lo = f_lo == 0
    hit_hi = (f_hi == 0) & ~hit_lo
    hi = np.where(hit_lo, lo, hi)
    lo = np.where(hit_hi, hi, lo)
    s_lo = _sgn(f_lo)

    iterations = 0
    for iterations in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        active = (hi - lo) > xtol * (1.0 + np.abs(mid))
        active &= (mid != lo) & (mid != hi)
        if not np.any(active):
            break
        which = np.flatnonzero(active)
        f_mid = np.asarray(fn(mid[which], which), dtype=float)
        same = _sgn(f_mid) == s_lo[which]
        exact = f_mid == 0
        lo[which] = np.where(same | exact, mid[which], lo[which])
        hi[which] = np.where(same & ~exact, hi[which], mid[which])

    util.debug.log_solver(
        "bisect", clock.elapsed(), what=what, brackets=len(lo), iterations=iterations)
    return 0.5 * (lo + hi), lo, hi


def newton_polish(fn_d, x, lo, hi, steps=3):
    # type: (FnWithDerivative, Array, Array, Array, int) -> Array
    """A few Newton steps that never leave the bracket."""
    x = np.array(x, dtype=float, ndmin=1)
    everything = np.arange(len(x))
    for _ in range(steps):
        f, df = fn_d(x, everything)
        with np.errstate(divide="ignore", invalid="ignore"):
            candidate = x - f / df
        ok = np.isfinite(candidate) & (candidate >= lo) & (candidate <= hi)
        x = np.where(ok, candidate, x)
    return x


def safeguarded_newton(
    fn_d,               # type: FnWithDerivative
    lo,                 # type: Array
    hi,                 # type: Array
    xtol=1e-13,         # type: float
    max_iter=100,       # type: int
    indices=None,       # type: Optional[Sequence[int]]
    what="root",        # type: str
):
    # type: (...) -> Array
    """Newton's method falling back to bisection whenever a step leaves the bracket."""
    clock = timer()
    lo = np.array(lo, dtype=float, ndmin=1)
    hi = np.array(hi, dtype=float, ndmin=1)
    everything = np.arange(len(lo))
    f_lo, _ = fn_d(lo, everything)
    f_hi, _ = fn_d(hi, everything)
    check_brackets(f_lo, f_hi, indices, what)
    # orient every bracket so that f < 0 at lo
    orient = np.where(f_lo < 0, 1.0, -1.0)

    x = 0.5 * (lo + hi)
    x = np.where(f_lo == 0, lo, np.where(f_hi == 0, hi, x))
    done = (f_lo == 0) | (f_hi == 0)
    step_old = hi - lo

    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.all(done):
            break
        which = np.flatnonzero(~done)
        xa = x[which]
        f, df = fn_d(xa, which)
        f = f * orient[which]
        df = df * orient[which]
        lo_a = np.where(f < 0, xa, lo[which])
        hi_a = np.where(f > 0, xa, hi[which])
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = xa - f / df
        ok = (
            np.isfinite(newton) & (newton > lo_a) & (newton < hi_a)
            & (np.abs(newton - xa) < 0.5 * np.abs(step_old[which]))
        )
        x_new = np.where(ok, newton, 0.5 * (lo_a + hi_a))
        step = x_new - xa
        scale = xtol * (1.0 + np.abs(xa))
        converged = (np.abs(step) <= scale) | ((hi_a - lo_a) <= scale) | (f == 0)
        lo[which] = lo_a
        hi[which] = hi_a
        step_old[which] = step
        x[which] = np.where(f == 0, xa, x_new)
        done[which] = converged

    if not np.all(done):
        first = int(np.flatnonzero(~done)[0])
        n = int(indices[first]) if indices is not None else first
        raise exceptions.NoConvergence(
            "{} did not converge after {} iterations (n={})".format(what, max_iter, n), n=n)
    util.debug.log_solver(
        "newton", clock.elapsed(), what=what, brackets=len(lo), iterations=iterations)
    return x
