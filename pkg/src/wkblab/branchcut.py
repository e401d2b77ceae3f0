"""Single-valued branch of the perturbed symbol's square root on the cut plane.

The perturbed symbol has one simple zero slightly below the real axis; the cut
is the downward vertical ray from it. On the remaining (simply connected)
domain the square root fixed to be ~ +1 at the origin extends single-valuedly.
Continuation is done by unwrapping the argument of q along caller-supplied
polyline paths, with adaptive step refinement so that no single step changes
the argument by more than pi/2.

A small exclusion tube of radius ``eps_cut`` around the ray keeps evaluations
away from the branch point. The default tube radius shrinks with the distance
of the turning point from the real axis so that real-axis paths (which pass
within ``|Im X_lam|`` of the branch point near the root) remain legal for the
whole lam sweep.
"""

import cmath
import math

import numpy as np

from .errors import BranchViolationError, QuadratureError, ResolutionError
from .potential import eval_q, symbol_zero
from .quad import gl_adaptive, gl_nodes

DEFAULT_EPS_CUT = 1e-3
MAX_REFINE_DEPTH = 48


class BranchTracker:
    """Mutable cursor carrying the unwrapped argument of q along a path.

    Single-owner: transfer between contexts is fine, concurrent sharing is
    not. The branch is pinned at the reference point 0 where q ~ 1 and the
    principal argument is used.
    """

    def __init__(self, params, eps_cut=None):
        self.params = params
        self.cut_origin = symbol_zero(params)
        if eps_cut is None:
            # Keep the tube inside the gap between the cut origin and the
            # real axis so real-interval paths stay legal at every lam.
            eps_cut = min(DEFAULT_EPS_CUT, 0.5 * abs(self.cut_origin.imag))
            eps_cut = max(eps_cut, 1e-12)
        self.eps_cut = eps_cut
        self.reference_point = 0.0 + 0.0j
        self.last_point = 0.0 + 0.0j
        self.last_argument = cmath.phase(eval_q(params, 0.0 + 0.0j))
        self.reference_value = self._value(self.last_point, self.last_argument)

    def _value(self, z, arg_q):
        q = eval_q(self.params, z)
        return cmath.exp(0.5 * (math.log(abs(q)) + 1j * arg_q))

    def cut_distance(self, z):
        """Distance from z to the downward ray issued at the cut origin."""
        dz = complex(z) - self.cut_origin
        if dz.imag >= 0.0:
            return abs(dz)
        return abs(dz.real)

    def _check_clear(self, z):
        d = self.cut_distance(z)
        if d < self.eps_cut:
            raise BranchViolationError(
                f"point {z} lies within eps_cut={self.eps_cut:.3g} of the cut "
                f"(distance {d:.3g})"
            )

    def _segment_crosses_cut(self, a, b):
        """True when the straight segment [a, b] intersects the cut ray."""
        xa = a.real - self.cut_origin.real
        xb = b.real - self.cut_origin.real
        if xa == xb:
            return False
        if xa * xb > 0:
            return False
        t = xa / (xa - xb)
        y = a.imag + t * (b.imag - a.imag)
        return y <= self.cut_origin.imag

    def _walk(self, a, b, arg_a):
        """Unwrapped argument of q at b, continuing from (a, arg_a) along [a, b]."""
        if self._segment_crosses_cut(a, b):
            raise BranchViolationError(f"segment {a} -> {b} crosses the cut ray")
        self._check_clear(b)

        def step(z0, arg0, z1, depth):
            q1 = eval_q(self.params, z1)
            d = cmath.phase(q1) - arg0
            d = (d + math.pi) % (2 * math.pi) - math.pi
            if abs(d) < math.pi / 2:
                return arg0 + d
            if depth >= MAX_REFINE_DEPTH:
                raise ResolutionError(
                    f"argument refinement exceeded depth {MAX_REFINE_DEPTH} near {z1}"
                )
            zm = 0.5 * (z0 + z1)
            self._check_clear(zm)
            am = step(z0, arg0, zm, depth + 1)
            return step(zm, am, z1, depth + 1)

        return step(a, arg_a, complex(b), 0)

    def move_to(self, z):
        """Advance the cursor to z along the straight segment, returning sqrt q."""
        z = complex(z)
        arg = self._walk(self.last_point, z, self.last_argument)
        self.last_point = z
        self.last_argument = arg
        return self._value(z, arg)

    def argument_at(self, z):
        """Unwrapped argument of q at z (advances the cursor)."""
        self.move_to(z)
        return self.last_argument


def sqrt_q(params, z, tracker):
    """Tracked branch of the square root of the perturbed symbol at z."""
    if tracker.params is not params:
        raise ValueError("tracker was built for different params")
    return tracker.move_to(z)


def _segment_values(tracker, a, b, nodes):
    """sqrt q at the Gauss nodes of [a, b], walking the cursor through them."""
    pts = [a + (b - a) * 0.5 * (1.0 + t) for t in nodes]
    return np.array([tracker.move_to(p) for p in pts])


def phase_integral(params, path, tracker, rel_tol=1e-9, order=24, max_doublings=12):
    """Integral of the tracked square root along a polyline.

    Per-segment composite Gauss-Legendre with panel doubling until the
    relative tolerance; the tracker walks every quadrature node in path
    order so the branch stays continuous.
    """
    if tracker.params is not params:
        raise ValueError("tracker was built for different params")
    path = [complex(p) for p in path]
    if len(path) < 2:
        return 0.0 + 0.0j
    nodes, weights = gl_nodes(order)
    total = 0.0 + 0.0j
    achieved = 0.0
    for a, b in zip(path[:-1], path[1:]):
        if a == b:
            continue
        tracker.move_to(a)
        saved = (tracker.last_point, tracker.last_argument)
        prev = None
        panels = 1
        for _ in range(max_doublings + 1):
            tracker.last_point, tracker.last_argument = saved
            ts = np.linspace(0.0, 1.0, panels + 1)
            seg = 0.0 + 0.0j
            for lo, hi in zip(ts[:-1], ts[1:]):
                pa, pb = a + (b - a) * lo, a + (b - a) * hi
                vals = _segment_values(tracker, pa, pb, nodes)
                seg += 0.5 * (pb - pa) * np.sum(weights * vals)
            if prev is not None:
                err = abs(seg - prev)
                scale = max(abs(seg), abs(b - a), 1e-300)
                if err <= rel_tol * scale:
                    achieved = max(achieved, err / scale)
                    break
            prev = seg
            panels *= 2
        else:
            raise QuadratureError(
                f"phase integral on segment {a} -> {b} did not reach "
                f"rel_tol={rel_tol:g}",
                achieved=abs(seg - prev) if prev is not None else None,
            )
        tracker.move_to(b)
        total += seg
    return total


def left_tail_growth(params, x, rel_tol=1e-9):
    """Exponent contribution of the oscillatory region left of the root.

    Integral of |Re sqrt q| over [x, x_star], for x in [-delta*lam^2, x_star].
    |Re(sqrt q)| does not depend on the branch (the two branches differ by a
    sign), so the pointwise principal square root is used and the adaptive
    quadrature is free to refine near the root where the integrand has a
    near-singular feature at the scale of |Im X_lam|.
    """
    from .potential import real_root

    x_star = real_root(params.sigma).x_star
    if not x <= x_star:
        raise ValueError(f"x = {x} must lie left of the root {x_star:.6g}")
    if x == x_star:
        return 0.0

    def integrand(r):
        return np.abs(np.real(np.sqrt(eval_q(params, r.astype(complex)))))

    value, _ = gl_adaptive(integrand, float(x), x_star, rel_tol=rel_tol)
    return float(value)
