"""Node rules for integrals over gaps and bands.

Gap integrals carry the weight 1/√((μ−λ₁)(λ₂−μ)) and are done with
Gauss–Chebyshev nodes, so that (1/π)∫ f(μ)/√((μ−λ₁)(λ₂−μ)) dμ is the plain
mean of f over the nodes.  Band integrals use μ = c − h·cos θ and a
geometrically graded Gauss–Legendre rule in θ, which resolves square-root
endpoint behavior as well as the near-singular features left by narrow
neighbouring gaps.
"""
from collections import namedtuple
from functools import lru_cache
import threading

import numpy as np
from scipy.special import roots_legendre

from ..common import util
from . import exceptions
from .utils import timer


MYPY = False
if MYPY:
    from typing import Callable, NamedTuple, Optional, Tuple, Union
    Array = np.ndarray
    Estimate = Callable[[int], Union[float, Array]]
    BandNodes = NamedTuple("BandNodes", [
        ("mu", Array),
        ("left", Array),      # μ − lower
        ("right", Array),     # upper − μ
        ("weights", Array),
    ])
else:
    BandNodes = namedtuple("BandNodes", "mu left right weights")


GRADING_LEVELS = 30
_local = threading.local()


@lru_cache(maxsize=64)
def chebyshev_nodes(count):
    # type: (int) -> Array
    """Gauss–Chebyshev (first kind) abscissae on [−1, 1], descending."""
    theta = (np.arange(count) + 0.5) * np.pi / count
    nodes = np.cos(theta)
    nodes.setflags(write=False)
    return nodes


@lru_cache(maxsize=16)
def graded_theta_rule(order, levels=GRADING_LEVELS):
    # type: (int, int) -> Tuple[Array, Array]
    """Composite Gauss–Legendre rule on [0, π] with panels refined
    geometrically towards both ends.
    """
    half = [0.0] + [np.pi * 0.5 ** (levels - m) for m in range(levels)]
    breaks = np.array(half + [np.pi - b for b in reversed(half[:-1])])
    x, w = roots_legendre(order)
    left, right = breaks[:-1, None], breaks[1:, None]
    nodes = (0.5 * (right - left) * x + 0.5 * (right + left)).ravel()
    weights = (0.5 * (right - left) * w).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def band_rule(lower, upper, order, graded=True):
    # type: (float, float, int, bool) -> BandNodes
    """Nodes for ∫_lower^upper g(μ) dμ via μ = c − h·cos θ.

    `left` = μ − lower and `right` = upper − μ are computed from θ directly,
    so they stay exact where μ itself rounds onto an edge.
    """
    if graded:
        theta, w = graded_theta_rule(order)
    else:
        x, w = roots_legendre(order)
        theta, w = 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * w
    center = 0.5 * (lower + upper)
    half = 0.5 * (upper - lower)
    mu = center - half * np.cos(theta)
    left = 2.0 * half * np.sin(0.5 * theta) ** 2
    right = 2.0 * half * np.cos(0.5 * theta) ** 2
    return BandNodes(mu, left, right, w * half * np.sin(theta))


def band_distance(nodes, lower, upper, points):
    # type: (BandNodes, float, float, Array) -> Array
    """|μ − p| for points p outside the band, shape (nodes, points)."""
    points = np.asarray(points, dtype=float)
    below = (lower - points) + nodes.left[:, None]
    above = (points - upper) + nodes.right[:, None]
    inside = np.abs(nodes.mu[:, None] - points)
    return np.where(points <= lower, below, np.where(points >= upper, above, inside))


def nesting_meter():
    # type: () -> util.debug.StackMeter
    """The calling thread's own count of nested `adaptive` calls."""
    meter = getattr(_local, "meter", None)
    if meter is None:
        meter = _local.meter = util.debug.StackMeter()
    return meter


def adaptive(estimate, start, limit, tol, what="integral", n=None, atol=0.0):
    # type: (Estimate, int, int, float, str, Optional[int], float) -> Tuple[Union[float, Array], int]
    """Double the node count until two successive estimates agree.

    `estimate(count)` may return a scalar or an array; agreement is judged
    in the max norm, within `tol` relative to the size of the newer estimate
    plus the absolute floor `atol`.
    """
    clock = timer()
    with nesting_meter() as depth:
        count = start
        old = np.asarray(estimate(count), dtype=float)
        while True:
            count *= 2
            if count > limit:
                raise exceptions.NoConvergence(
                    "{} did not converge with {} nodes".format(what, limit),
                    n=n, details={"depth": depth})
            new = np.asarray(estimate(count), dtype=float)
            change = np.max(np.abs(new - old)) if new.size else 0.0
            scale = np.max(np.abs(new)) if new.size else 0.0
            if change <= tol * scale + atol or change == 0.0:
                break
            old = new

    util.debug.log_solver(
        "quadrature", clock.elapsed(), what=what, n=n, nodes=count, depth=depth)
    value = new if new.ndim else float(new)
    return value, count
