"""Chebyshev-Gauss quadrature and special-function helpers.

All closed-form outage expressions in this package reduce integrals over a
fading/path-loss composite to weighted sums over Chebyshev nodes of the
first kind.  This module owns that rule, plus the Beta and lower incomplete
Gamma functions the interference functionals need, and the probability
clamping policy applied to every analytical output.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _special

__all__ = [
    "DEFAULT_ORDER",
    "QuadratureRule",
    "chebyshev_nodes",
    "integrate_cg",
    "beta_fn",
    "lower_incomplete_gamma",
    "clamp_probability",
]

# Default node count; enough for every expression here to sit well inside
# the tolerances the tests enforce while staying cheap in sweeps.
DEFAULT_ORDER = 20


@dataclass(frozen=True)
class QuadratureRule:
    """First-kind Chebyshev-Gauss rule on [-1, 1].

    ``nodes[l] = cos((2l+1) pi / (2 order))`` for ``l = 0..order-1`` and
    ``weights[l] = (pi / order) sqrt(1 - nodes[l]^2)`` so that
    ``integral_{-1}^{1} f(x) dx ~= sum_l weights[l] f(nodes[l])``.

    Attributes:
        order: number of nodes, at least 1.
        nodes: strictly decreasing array of length ``order``.
        weights: positive array of length ``order``.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        if self.order < 1:
            raise ValueError(f"order must be a positive integer, got {self.order}")
        if len(self.nodes) != self.order or len(self.weights) != self.order:
            raise ValueError(
                f"nodes ({len(self.nodes)}) and weights ({len(self.weights)}) "
                f"must both have length order={self.order}"
            )
        if self.order > 1 and not np.all(np.diff(self.nodes) < 0.0):
            raise ValueError("nodes must be strictly decreasing")
        if not np.all(self.weights > 0.0):
            raise ValueError("weights must all be positive")


@lru_cache(maxsize=64)
def _cached_rule(order: int) -> QuadratureRule:
    l = np.arange(1, order + 1, dtype=float)
    nodes = np.cos((2.0 * l - 1.0) * np.pi / (2.0 * order))
    if order == 1:
        nodes = np.zeros(1)  # cos(pi/2) exactly, avoids 6e-17 dust
    weights = (np.pi / order) * np.sqrt(np.clip(1.0 - nodes * nodes, 0.0, None))
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(order=order, nodes=nodes, weights=weights)


def chebyshev_nodes(order: int = DEFAULT_ORDER) -> QuadratureRule:
    """Build (and cache) the Chebyshev-Gauss rule with ``order`` nodes.

    Raises:
        ValueError: if ``order`` is not a positive integer.
    """
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    return _cached_rule(int(order))


def integrate_cg(f, a: float, b: float, rule: QuadratureRule | None = None) -> float:
    """Integrate ``f`` over ``[a, b]`` with the Chebyshev-Gauss rule.

    The rule on [-1, 1] is mapped affinely, so the estimate is
    ``(b - a)/2 * sum_l weights[l] f((b - a)/2 nodes[l] + (b + a)/2)``.

    ``f`` may be vectorised over numpy arrays or accept scalars only.

    Raises:
        ValueError: if the interval is reversed or not finite, or if ``f``
            returns a non-finite value at any node (the error names the
            offending node).
    """
    if rule is None:
        rule = chebyshev_nodes(DEFAULT_ORDER)
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError(f"integration limits must be finite, got [{a}, {b}]")
    if a > b:
        raise ValueError(f"reversed integration interval [{a}, {b}]")
    if a == b:
        return 0.0
    half = 0.5 * (b - a)
    pts = half * rule.nodes + 0.5 * (b + a)
    try:
        vals = np.asarray(f(pts), dtype=float)
        if vals.shape != pts.shape:
            raise TypeError("integrand is not vectorised")
    except (TypeError, ValueError):
        vals = np.array([float(f(p)) for p in pts])
    bad = ~np.isfinite(vals)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(
            f"integrand returned non-finite value {vals[k]!r} at node x={pts[k]!r} "
            f"(node index {k} of {rule.order})"
        )
    return float(half * np.dot(rule.weights, vals))


def beta_fn(p: float, q: float) -> float:
    """Euler Beta function B(p, q) for positive real arguments."""
    if p <= 0.0 or q <= 0.0:
        raise ValueError(f"beta_fn requires positive arguments, got ({p}, {q})")
    return float(_special.beta(p, q))


def lower_incomplete_gamma(s: float, x):
    """Unnormalised lower incomplete gamma integral of t^(s-1) e^(-t) on [0, x].

    ``x`` may be a scalar or an array; negative ``x`` is rejected.
    """
    if s <= 0.0:
        raise ValueError(f"shape parameter must be positive, got {s}")
    arr = np.asarray(x, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("lower_incomplete_gamma requires x >= 0")
    out = _special.gamma(s) * _special.gammainc(s, arr)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def clamp_probability(value, *, context: str = "", warn_tol: float = 1e-6, error_tol: float = 1e-2):
    """Clamp a probability (or array of them) to [0, 1].

    Excursions within ``warn_tol`` are treated as harmless float dust and
    clipped silently.  Larger ones up to ``error_tol`` are clipped with a
    warning; anything beyond that indicates a genuine numerical failure and
    raises.
    """
    arr = np.asarray(value, dtype=float)
    if arr.size:
        excess = float(max(np.max(arr) - 1.0, 0.0 - np.min(arr), 0.0))
        where = f" in {context}" if context else ""
        if excess > error_tol:
            raise ValueError(
                f"probability excursion {excess:.3g} beyond [0, 1]{where} "
                f"exceeds the {error_tol:.0e} failure threshold"
            )
        if excess > warn_tol:
            warnings.warn(
                f"clipping probability excursion {excess:.3g}{where}",
                RuntimeWarning,
                stacklevel=2,
            )
    clipped = np.clip(arr, 0.0, 1.0)
    return float(clipped) if np.isscalar(value) or arr.ndim == 0 else clipped
