"""Gauss-Legendre quadrature helpers used by several modules."""

from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@lru_cache(maxsize=8)
def gl_nodes(order):
    """Nodes and weights of Gauss-Legendre quadrature on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gl_fixed(f, a, b, order=32):
    """Single-panel Gauss-Legendre integral of ``f`` over [a, b].

    ``a`` and ``b`` may be complex; the integral is taken along the straight
    segment. ``f`` must accept a numpy array of points.
    """
    x, w = gl_nodes(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * np.sum(w * f(mid + half * x))


def gl_composite(f, a, b, rel_tol=1e-10, order=24, max_doublings=14):
    """Composite Gauss-Legendre with panel doubling until relative tolerance.

    Returns (value, error_estimate). Raises QuadratureError when the panel
    count limit is reached before the tolerance.
    """
    panels = 1
    prev = None
    for _ in range(max_doublings + 1):
        edges = np.linspace(0.0, 1.0, panels + 1)
        total = sum(
            gl_fixed(f, a + (b - a) * lo, a + (b - a) * hi, order)
            for lo, hi in zip(edges[:-1], edges[1:])
        )
        if prev is not None:
            err = abs(total - prev)
            scale = max(abs(total), 1e-300)
            if err <= rel_tol * scale:
                return total, err
        prev = total
        panels *= 2
    raise QuadratureError(
        f"composite GL did not reach rel_tol={rel_tol:g} after {panels // 2} panels",
        achieved=abs(total - prev) if prev is not None else None,
    )


def gl_adaptive(f, a, b, rel_tol=1e-9, order=24, max_depth=40, global_scale=None):
    """Adaptive bisection Gauss-Legendre along the segment [a, b].

    Per-interval error is estimated by comparing one panel against its two
    halves; intervals violating the (depth-shared) tolerance are split.
    ``global_scale`` absorbs cancellation across subintervals when the caller
    knows the overall magnitude. Returns (value, error_estimate).
    """
    whole = gl_fixed(f, a, b, order)
    scale = global_scale if global_scale is not None else max(abs(whole), 1e-300)

    def recurse(lo, hi, est, depth):
        mid = 0.5 * (lo + hi)
        left = gl_fixed(f, lo, mid, order)
        right = gl_fixed(f, mid, hi, order)
        err = abs(left + right - est)
        if err <= rel_tol * scale * max(abs(hi - lo) / abs(b - a), 1e-12) or err <= 1e-16 * scale:
            return left + right, err
        if depth >= max_depth:
            raise QuadratureError(
                f"adaptive GL exceeded depth {max_depth} on [{lo}, {hi}]",
                achieved=err,
            )
        v1, e1 = recurse(lo, mid, left, depth + 1)
        v2, e2 = recurse(mid, hi, right, depth + 1)
        return v1 + v2, e1 + e2

    return recurse(a, b, whole, 0)
