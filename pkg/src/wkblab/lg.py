"""Liouville-Green modes, Volterra amplitude refinement, and growth envelopes.

The leading-order modes are ``q^(-1/4) exp(+-lam*S)`` with the phase ``S``
integrated along the tracked branch; amplitudes are frozen at leading order
and the first-order Volterra refinement is exposed as a separate diagnostic.
Everything that can leave floating-point range is carried in log scale.
"""

from dataclasses import dataclass

import numpy as np

from .branchcut import BranchTracker, phase_integral
from .errors import ContractionError, RegionError
from .logscale import LogScaledComplex
from .potential import eval_q, q_prime, q_second, real_root, symbol_zero

EPSILON0_FACTOR = 0.3


def airy_disk_radius(sigma, factor=EPSILON0_FACTOR):
    """Radius of the neighborhood around the turning point excluded from LG."""
    return factor * abs(real_root(sigma).x_star)


@dataclass
class GrowthEnvelope:
    """Fitted regional growth bound for the subdominant solution.

    ``a_sigma`` is the action; ``c_sigma`` the fitted left-region constant;
    ``m_fit`` and ``log_c`` the fitted polynomial-loss exponent and offset.
    """

    a_sigma: float
    c_sigma: float
    gamma: float
    delta: float
    m_fit: float
    log_c: float


def lg_evaluate(params, x, sign, basepoint, tracker=None, epsilon0=None,
                check_basepoint=True):
    """Leading-order LG mode ``q^(-1/4) exp(sign*lam*S)`` in log scale.

    ``S`` is the phase integral from ``basepoint`` to ``x`` along the tracked
    branch. Both endpoints must be outside the Airy disk around the turning
    point (radius ``epsilon0``); callers that use the basepoint purely as a
    normalization anchor (no accuracy claim there) may exempt it, which is
    needed at moderate lam where the symbol zero drifts toward the origin.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    if epsilon0 is None:
        epsilon0 = airy_disk_radius(params.sigma)
    x_lam = symbol_zero(params)
    checked = ((x, "x"), (basepoint, "basepoint")) if check_basepoint else ((x, "x"),)
    for pt, name in checked:
        if abs(complex(pt) - x_lam) < epsilon0:
            raise RegionError(
                f"{name} = {pt} inside the Airy disk (radius {epsilon0:.3g}) "
                f"around the turning point"
            )
    if tracker is None:
        tracker = BranchTracker(params)
    s = phase_integral(params, [basepoint, x], tracker)
    # tracker now sits at x with the unwrapped argument of q there
    arg_q = tracker.last_argument
    mod_q = abs(eval_q(params, complex(x)))
    lam = params.lam
    return LogScaledComplex(
        -0.25 * np.log(mod_q) + sign * lam * s.real,
        -0.25 * arg_q + sign * lam * s.imag,
    )


def _remainder(q, qp, qpp):
    """Liouville correction potential from q and its two derivatives."""
    return 5.0 / 16.0 * qp * qp / (q * q * q) - 0.25 * qpp / (q * q)


def liouville_remainder(params, x, min_mod=1e-8):
    """Correction potential entering the Volterra refinement.

    ``R = 5/16 (q')^2 / q^3 - 1/4 q'' / q^2`` with analytic derivatives of the
    perturbed symbol. Raises RegionError too close to the turning point.
    """
    q = eval_q(params, x)
    if abs(q) < min_mod:
        raise RegionError(f"|q({x})| = {abs(q):.3g} too small for the LG remainder")
    return _remainder(q, q_prime(params, x), q_second(params, x))


@dataclass
class VolterraResult:
    """Sampled amplitude correction along the interval."""

    x: np.ndarray
    s: np.ndarray
    b: np.ndarray
    gaps: list
    iterations: int


def volterra_amplitude(params, interval, sign, tol=1e-12, n=200, max_iter=60,
                       remainder=None):
    """Fixed-point solution of the amplitude Volterra equation on a grid.

    The amplitude satisfies ``B = 1 + Int kernel * R * B`` with the kernel
    bounded by 1/lam once the base point sits at the recessive end: the left
    end of the interval for the growing (+) mode, the right end for the
    decaying (-) mode. Re S must be monotone along the interval. ``remainder``
    can override the correction potential (synthetic tests).
    """
    a, b_end = interval
    if not a < b_end:
        raise ValueError("interval must be increasing (a, b)")
    lam = params.lam
    xs = np.linspace(a, b_end, n)
    tracker = BranchTracker(params)
    tracker.move_to(complex(a))
    # cumulative phase along the grid
    s = np.empty(n, dtype=complex)
    s[0] = 0.0
    for i in range(1, n):
        s[i] = s[i - 1] + phase_integral(
            params, [complex(xs[i - 1]), complex(xs[i])], tracker
        )
    ds = np.diff(s.real)
    if not (np.all(ds > 0) or np.all(ds < 0)):
        raise ValueError(
            "Re S is not monotone on the interval; subdivide into monotone pieces"
        )
    if remainder is None:
        r = np.array([liouville_remainder(params, complex(x)) for x in xs])
    else:
        r = np.asarray([remainder(complex(x)) for x in xs], dtype=complex)

    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    # In the variable u = sign*s both modes take the plus form; the base point
    # sits at the recessive end, i.e. where Re u is smallest.
    u = sign * s
    order = np.arange(n) if u[0].real < u[-1].real else np.arange(n - 1, -1, -1)
    uo = u[order]
    ro = r[order]
    diff = uo[:, None] - uo[None, :]
    # entries with j past i are masked by zero weights; clip their exponent so
    # the unused exp() cannot overflow
    expo = -2.0 * lam * diff
    expo = np.minimum(expo.real, 0.0) + 1j * expo.imag
    kernel = (1.0 - np.exp(expo)) / (2.0 * lam)
    # trapezoid weights for the cumulative integral up to each i
    dt = np.diff(uo)
    weights = np.zeros((n, n), dtype=complex)
    for i in range(1, n):
        w = np.zeros(n, dtype=complex)
        w[1 : i + 1] += 0.5 * dt[:i]
        w[:i] += 0.5 * dt[:i]
        weights[i] = w
    kernel_weighted = kernel * weights * ro[None, :]

    b = np.ones(n, dtype=complex)
    gaps = []
    prev_gap = None
    for it in range(max_iter):
        b_new = 1.0 + kernel_weighted @ b
        gap = float(np.max(np.abs(b_new - b)))
        gaps.append(gap)
        b = b_new
        if gap < tol:
            inv = np.empty(n, dtype=complex)
            inv[order] = b
            return VolterraResult(xs, s, inv, gaps, it + 1)
        if prev_gap is not None and gap > prev_gap and gap > 1.0:
            raise ContractionError(
                f"Volterra iteration diverges at lam={lam}; increase lam"
            )
        prev_gap = gap
    raise ContractionError(
        f"Volterra iteration did not reach tol={tol:g} in {max_iter} iterations"
    )


def fit_growth_envelope(sigma, gamma, delta, lambdas, right_max_logs,
                        left_edge_logs, a_sigma=None, margin=0.1):
    """Fit the envelope constants from oracle sweep data.

    ``right_max_logs[i]`` is the max of log|W| over the right half-line for
    ``lambdas[i]``; ``left_edge_logs[i]`` the value of log|W| at the left edge
    ``-delta*lam^2``. (m_fit, log_c) come from a least-squares fit of the
    right-side maxima against log lam; c_sigma from a least-squares fit of the
    left-edge excess against gamma*sqrt(delta)*lam. A margin is added so the
    fitted envelope dominates every fit point.
    """
    from .potential import action

    lambdas = np.asarray(lambdas, dtype=float)
    right = np.asarray(right_max_logs, dtype=float)
    left = np.asarray(left_edge_logs, dtype=float)
    if a_sigma is None:
        a_sigma = action(sigma)

    if len(lambdas) >= 2:
        coeffs = np.polynomial.polynomial.polyfit(np.log(lambdas), right, 1)
        log_c, m_fit = float(coeffs[0]), float(coeffs[1])
    else:
        log_c, m_fit = float(right[0]), 0.0
    resid = right - (m_fit * np.log(lambdas) + log_c)
    log_c += max(0.0, float(resid.max())) + margin

    excess = left - a_sigma * lambdas - m_fit * np.log(lambdas) - log_c
    scale = gamma * np.sqrt(delta) * lambdas
    c_sigma = float(np.sum(excess * scale) / np.sum(scale * scale))
    resid_left = excess - c_sigma * scale
    c_sigma += max(0.0, float((resid_left / scale).max())) + margin
    return GrowthEnvelope(
        a_sigma=float(a_sigma),
        c_sigma=c_sigma,
        gamma=float(gamma),
        delta=float(delta),
        m_fit=m_fit,
        log_c=log_c,
    )


def envelope_log(params, envelope, x, tracker=None):
    """Regional log bound for the subdominant solution at real x.

    Polynomial-log floor everywhere; plus the phase-integral exponent between
    the root and 0 in the forbidden region; plus the fitted
    ``c_sigma*gamma*sqrt|X|`` contribution left of the root.
    """
    lam = params.lam
    base = envelope.m_fit * np.log(lam) + envelope.log_c
    if x >= 0:
        return base
    x_star = real_root(params.sigma).x_star
    if tracker is None:
        tracker = BranchTracker(params)
    if x >= x_star:
        s = phase_integral(params, [complex(x), 0.0], tracker)
        return base + lam * s.real
    s = phase_integral(params, [complex(x_star), 0.0], tracker)
    return base + lam * s.real + envelope.c_sigma * envelope.gamma * np.sqrt(abs(x))
