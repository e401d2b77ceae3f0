"""Airy pair on complex arguments and the uniform turning-point representation.

Evaluation strategy, by modulus of the argument:

* ``|z| <= 4.4``  Maclaurin series (both functions and derivatives);
* ``4.4 < |z| < 11``  Taylor continuation of the Airy ODE inward along the
  ray from ``|z| = 11``, seeded by the asymptotic expansions (inward
  propagation is stable for both the recessive and the dominant member);
* ``|z| >= 11``  Poincare expansions with sector-correct branches; outside
  ``|arg z| <= 2pi/3`` the value is assembled from the two rotated arguments
  via the standard connection identity.

The second member is always assembled from the first at rotated arguments,
which keeps a single asymptotic primitive. Log-scaled output is available for
arguments whose values leave floating-point range.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningError, RegionError, StencilError
from .logscale import LogScaledComplex
from .potential import eval_q, q_prime, symbol_zero
from .quad import gl_nodes

SERIES_RADIUS = 4.4
ASYM_RADIUS = 11.0
SECTOR_LIMIT = 2 * math.pi / 3 + 1e-13
CANCEL_FLAG_LOG = math.log(1e6)

AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
SQRT3 = math.sqrt(3.0)
OMEGA = cmath.exp(2j * math.pi / 3)
OMEGA_BAR = cmath.exp(-2j * math.pi / 3)


@dataclass
class AiryPair:
    """Values of the Airy pair and first derivatives at one point."""

    ai: complex
    ai_prime: complex
    bi: complex
    bi_prime: complex
    precision_degraded: bool = False

    def wronskian(self):
        return self.ai * self.bi_prime - self.ai_prime * self.bi


@dataclass
class AiryPairLog:
    """Log-scaled Airy pair for arguments outside plain floating range."""

    ai: LogScaledComplex
    ai_prime: LogScaledComplex
    bi: LogScaledComplex
    bi_prime: LogScaledComplex
    precision_degraded: bool = False


def _series_fg(z):
    """Maclaurin sums f, f', g, g' of the two standard Airy series."""
    if z == 0:
        return 1.0 + 0j, 0.0 + 0j, 0.0 + 0j, 1.0 + 0j
    z3 = z * z * z
    f = ak = 1.0 + 0j
    g = bk = z
    fp = 0.0 + 0j
    gp = 1.0 + 0j
    for k in range(1, 140):
        ak *= z3 / ((3 * k) * (3 * k - 1))
        bk *= z3 / ((3 * k + 1) * (3 * k))
        f += ak
        g += bk
        fp += ak * (3 * k) / z
        gp += bk * (3 * k + 1) / z
        if abs(ak) + abs(bk) < 1e-20 * (abs(f) + abs(g)):
            break
    return f, fp, g, gp


def _series_pair(z):
    f, fp, g, gp = _series_fg(z)
    ai = AI0 * f + AIP0 * g
    aip = AI0 * fp + AIP0 * gp
    bi = SQRT3 * (AI0 * f - AIP0 * g)
    bip = SQRT3 * (AI0 * fp - AIP0 * gp)
    return ai, aip, bi, bip


def _asym_ai_log(z):
    """Poincare expansion of the first member, valid |arg z| <= 2pi/3.

    Returns log-scaled (ai, ai_prime).
    """
    zeta = (2.0 / 3.0) * z ** 1.5
    s_ai = 1.0 + 0j
    s_aip = 1.0 + 0j
    uk = 1.0
    vk = 1.0
    term_scale = 1.0
    best = float("inf")
    k = 0
    while k < 60:
        k += 1
        uk *= (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / (216.0 * k * (2 * k - 1))
        vk = uk * (6 * k + 1) / (1.0 - 6 * k)
        term = (-1.0) ** k * uk / zeta**k
        term_p = (-1.0) ** k * vk / zeta**k
        size = abs(term)
        if size > best:
            break
        best = min(best, size)
        s_ai += term
        s_aip += term_p
        if size < 1e-17 * abs(s_ai):
            break
    quarter_log = 0.25 * cmath.log(z)
    pref = -math.log(2.0 * math.sqrt(math.pi))
    ai = LogScaledComplex(
        pref - quarter_log.real - zeta.real,
        -quarter_log.imag - zeta.imag,
    ).scaled(s_ai)
    aip = LogScaledComplex(
        pref + quarter_log.real - zeta.real,
        quarter_log.imag - zeta.imag + math.pi,  # overall minus sign
    ).scaled(s_aip)
    return ai, aip


def _taylor_continue(z0, y0, y1, target, max_step=0.7, order=30):
    """Propagate y'' = z y from (y0, y1) at z0 to target along the segment."""
    steps = max(1, int(math.ceil(abs(target - z0) / max_step)))
    h = (target - z0) / steps
    z = z0
    for _ in range(steps):
        a = [y0, y1]
        for n in range(order - 1):
            prev = a[n - 1] if n >= 1 else 0.0
            a.append((z * a[n] + prev) / ((n + 1) * (n + 2)))
        y = 0.0 + 0j
        yp = 0.0 + 0j
        for n in range(len(a) - 1, 0, -1):
            y = (y + a[n]) * h
            yp = (yp + n * a[n]) * h
        y += a[0]
        yp = yp / h
        y0, y1 = y, yp
        z = z + h
    return y0, y1


def _ai_core_log(z):
    """Log-scaled (ai, ai_prime, degraded) for any complex z."""
    z = complex(z)
    r = abs(z)
    if r <= SERIES_RADIUS:
        ai, aip, _, _ = _series_pair(z)
        return (
            LogScaledComplex.from_complex(ai),
            LogScaledComplex.from_complex(aip),
            False,
        )
    theta = cmath.phase(z)
    if abs(theta) > SECTOR_LIMIT:
        # connection identity: first member from the two rotated arguments
        a1, p1, d1 = _ai_core_log(z * OMEGA)
        a2, p2, d2 = _ai_core_log(z * OMEGA_BAR)
        ai = a1.scaled(-OMEGA).add(a2.scaled(-OMEGA_BAR))
        aip = p1.scaled(-OMEGA * OMEGA).add(p2.scaled(-OMEGA_BAR * OMEGA_BAR))
        big = max(a1.log_mod, a2.log_mod)
        degraded = d1 or d2 or (big - ai.log_mod > CANCEL_FLAG_LOG)
        return ai, aip, degraded
    if r >= ASYM_RADIUS:
        ai, aip = _asym_ai_log(z)
        return ai, aip, False
    # middle annulus: continue along the ray in the direction in which the
    # first member is non-recessive (errors then cannot outgrow the value):
    # inward from the asymptotic circle while it is recessive (|arg| <= pi/3),
    # outward from the series disk while it is dominant.
    if abs(theta) <= math.pi / 3:
        zs = ASYM_RADIUS * cmath.exp(1j * theta)
        ai_s, aip_s = _asym_ai_log(zs)
        y0, y1 = _taylor_continue(zs, ai_s.to_complex(), aip_s.to_complex(), z)
    else:
        zs = 0.95 * SERIES_RADIUS * cmath.exp(1j * theta)
        ai_s, aip_s, _, _ = _series_pair(zs)
        y0, y1 = _taylor_continue(zs, ai_s, aip_s, z)
    return (
        LogScaledComplex.from_complex(y0),
        LogScaledComplex.from_complex(y1),
        False,
    )


def airy_eval_log(z):
    """Log-scaled Airy pair at z (no magnitude restriction)."""
    ai, aip, d_ai = _ai_core_log(z)
    z = complex(z)
    if abs(z) <= SERIES_RADIUS:
        _, _, bi_c, bip_c = _series_pair(z)
        return AiryPairLog(
            ai, aip,
            LogScaledComplex.from_complex(bi_c),
            LogScaledComplex.from_complex(bip_c),
            d_ai,
        )
    a1, p1, d1 = _ai_core_log(z * OMEGA)
    a2, p2, d2 = _ai_core_log(z * OMEGA_BAR)
    e = cmath.exp(1j * math.pi / 6)
    bi = a1.scaled(e).add(a2.scaled(e.conjugate()))
    e5 = cmath.exp(5j * math.pi / 6)
    bip = p1.scaled(e5).add(p2.scaled(e5.conjugate()))
    big = max(a1.log_mod, a2.log_mod)
    degraded = d_ai or d1 or d2 or (big - bi.log_mod > CANCEL_FLAG_LOG)
    return AiryPairLog(ai, aip, bi, bip, degraded)


def airy_eval(z, max_abs=1e3):
    """Airy pair at z as plain complex values.

    Arguments beyond ``max_abs`` are refused; values that leave floating
    range raise OverflowGuardError (use :func:`airy_eval_log` instead).
    """
    z = complex(z)
    if abs(z) > max_abs:
        raise RegionError(
            f"|z| = {abs(z):.3g} beyond configured max {max_abs:g}; "
            "use airy_eval_log"
        )
    logp = airy_eval_log(z)
    return AiryPair(
        logp.ai.to_complex(),
        logp.ai_prime.to_complex(),
        logp.bi.to_complex(),
        logp.bi_prime.to_complex(),
        logp.precision_degraded,
    )


# Liouville-Airy coordinate ----------------------------------------------------


def airy_coordinate(params, x, gl_order=48):
    """Airy coordinate at x: (2/3) zeta^(3/2) equals the phase from X_lam.

    Computed as ``zeta = (x - X_lam) * qp^(1/3) * ((3/2) J)^(2/3)`` where J is
    the desingularized phase quadrature along the straight segment; the two
    fractional powers act on near-positive quantities so principal branches
    keep zeta single-valued on the cut chart, real-positive right of the
    turning point and on the upper negative-real side left of it.
    """
    x_lam = symbol_zero(params)
    qp = q_prime(params, x_lam)
    dz = complex(x) - x_lam
    if dz == 0:
        return 0.0 + 0.0j
    nodes, weights = gl_nodes(gl_order)
    u = 0.5 * (nodes + 1.0)
    zpts = x_lam + (u * u) * dz
    ratio = eval_q(params, zpts) / (qp * (zpts - x_lam))
    j = 0.5 * np.sum(weights * 2.0 * u * u * np.sqrt(ratio))
    return dz * qp ** (1.0 / 3.0) * (1.5 * j) ** (2.0 / 3.0)


@dataclass
class AiryChart:
    """Real-axis chart of the Airy coordinate around the turning point."""

    center: complex
    radius: float
    x: np.ndarray
    zeta: np.ndarray
    zeta_prime: np.ndarray = field(default=None)

    @property
    def h(self):
        return float(self.x[1] - self.x[0])

    @classmethod
    def build(cls, params, n=161, radius=None, epsilon0=None):
        from .lg import airy_disk_radius

        center = symbol_zero(params)
        if radius is None:
            if epsilon0 is None:
                epsilon0 = airy_disk_radius(params.sigma)
            radius = 2.0 * epsilon0
        x = np.linspace(center.real - radius, center.real + radius, n)
        zeta = np.array([airy_coordinate(params, xi) for xi in x])
        chart = cls(center=center, radius=radius, x=x, zeta=zeta)
        chart.zeta_prime = chart._fd_zeta_prime()
        return chart

    def _fd_zeta_prime(self):
        z = self.zeta
        h = self.h
        d = np.empty_like(z)
        d[2:-2] = (-z[4:] + 8 * z[3:-1] - 8 * z[1:-3] + z[:-4]) / (12 * h)
        # 4th-order one-sided stencils at the edges
        for i, sgn in ((0, 1), (1, 1), (len(z) - 2, -1), (len(z) - 1, -1)):
            s = z[i : i + 5 * sgn : sgn] if sgn > 0 else z[i : i - 5 if i >= 5 else None : -1]
            d[i] = sgn * (
                -25 * s[0] + 48 * s[1] - 36 * s[2] + 16 * s[3] - 3 * s[4]
            ) / (12 * h)
        return d

    def interior(self, margin=3):
        """Slice of indices where centered 4th-order stencils are valid."""
        return slice(margin, len(self.x) - margin)


@dataclass
class UniformFit:
    """Per-sample coefficients of the uniform Airy representation."""

    x: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    ok: np.ndarray
    heldout_x: np.ndarray
    heldout_residual: np.ndarray

    @property
    def max_residual(self):
        return float(np.max(self.heldout_residual))


def fit_uniform_representation(params, chart, trace, cond_floor=1e-12):
    """Solve for the two coefficient samples of the uniform representation.

    At every second chart sample the 2x2 system built from (W, W') determines
    (b0, b1); the remaining samples are held out and report the relative
    residual of predicting W there with neighbor-averaged coefficients,
    normalized by the local sectorial scale max(|Ai|, lam^(-2/3) |Ai'|).
    """
    lam = params.lam
    mu = lam ** (2.0 / 3.0)
    c = lam ** (-4.0 / 3.0)
    w_vals, wp_vals = trace.eval_many(chart.x)
    a_vals = np.empty(len(chart.x), dtype=complex)
    ap_vals = np.empty(len(chart.x), dtype=complex)
    for i, z in enumerate(mu * chart.zeta):
        pair = airy_eval(z)
        a_vals[i] = pair.ai
        ap_vals[i] = pair.ai_prime

    n = len(chart.x)
    b0 = np.full(n, np.nan, dtype=complex)
    b1 = np.full(n, np.nan, dtype=complex)
    ok = np.zeros(n, dtype=bool)
    for i in range(0, n, 2):
        a, ap = a_vals[i], ap_vals[i]
        zp = chart.zeta_prime[i]
        wz = mu * chart.zeta[i]
        m00, m01 = a, c * ap
        m10, m11 = mu * zp * ap, c * mu * zp * wz * a
        det = m00 * m11 - m01 * m10
        scale = (abs(m00) + abs(m01)) * (abs(m10) + abs(m11))
        if abs(det) <= cond_floor * max(scale, 1e-300):
            continue
        b0[i] = (w_vals[i] * m11 - m01 * wp_vals[i]) / det
        b1[i] = (m00 * wp_vals[i] - w_vals[i] * m10) / det
        ok[i] = True
    if not ok.any():
        raise ConditioningError("every chart sample was too ill-conditioned")

    held_x, held_res = [], []
    for i in range(1, n - 1, 2):
        if not (ok[i - 1] and ok[i + 1]):
            continue
        b0m = 0.5 * (b0[i - 1] + b0[i + 1])
        b1m = 0.5 * (b1[i - 1] + b1[i + 1])
        pred = b0m * a_vals[i] + c * b1m * ap_vals[i]
        local = max(abs(a_vals[i]), abs(ap_vals[i]) / mu) * abs(b0m)
        held_x.append(chart.x[i])
        held_res.append(abs(pred - w_vals[i]) / max(local, 1e-300))
    return UniformFit(
        x=chart.x,
        b0=b0,
        b1=b1,
        ok=ok,
        heldout_x=np.array(held_x),
        heldout_residual=np.array(held_res),
    )


def schwarzian_r(params, zeta, chart):
    """Half the Schwarzian of the inverse chart map at the given coordinate.

    Uses 4th-order centered differences of the chart's zeta samples; the
    inverse-function identity converts {zeta, X} into {X, zeta}.
    """
    idx = int(np.argmin(np.abs(chart.zeta - zeta)))
    return _schwarzian_at(chart, idx)


def _schwarzian_at(chart, idx):
    z = chart.zeta
    h = chart.h
    if idx < 3 or idx > len(z) - 4:
        raise StencilError("chart sample too close to the edge for the stencil")
    zp = (-z[idx + 2] + 8 * z[idx + 1] - 8 * z[idx - 1] + z[idx - 2]) / (12 * h)
    zpp = (
        -z[idx + 2] + 16 * z[idx + 1] - 30 * z[idx] + 16 * z[idx - 1] - z[idx - 2]
    ) / (12 * h * h)
    zppp = (
        z[idx + 3]
        - 8 * z[idx + 2]
        + 13 * z[idx + 1]
        - 13 * z[idx - 1]
        + 8 * z[idx - 2]
        - z[idx - 3]
    ) / (8 * h**3)
    s_zeta_x = zppp / zp - 1.5 * (zpp / zp) ** 2
    return -0.5 * s_zeta_x / (zp * zp)
