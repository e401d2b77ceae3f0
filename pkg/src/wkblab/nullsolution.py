"""Exact separated null field, Gevrey cutoffs, commutators, and lower bounds.

The field is ``V(t,x,y,z) = e^{i tau t} e^{i lam^6 y} psi(z) W(lam^2 x)`` with
the Gaussian ground state ``psi`` and the recessive trace ``W`` from the
oracle. Cutoffs are flat-core Gevrey bumps built from the primitive of
``exp(-(1-u^2)^(-1/(s'-1)))``; their derivatives are analytic through a
polynomial recurrence, which is what makes the commutator and the
derivative-growth checks trustworthy to machine precision.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .logscale import LogScaledComplex
from .quad import gl_nodes

LOG_PI = math.log(math.pi)


# Hermite ground state -----------------------------------------------------------

def hermite_ground_log(lam, z):
    """log of the Gaussian ground-state factor (vectorizes over z)."""
    return -0.25 * LOG_PI + 1.5 * math.log(lam) - lam**6 * np.asarray(z) ** 2 / 2.0


def hermite_ground(lam, z):
    """The normalized Gaussian ground state at frequency lam^6."""
    return np.exp(hermite_ground_log(lam, z))


def hermite_mass(lam, half_width_mult=6.0, order=64, panels=8):
    """Quadrature of psi^2 over |z| <= half_width_mult / lam^3."""
    nodes, weights = gl_nodes(order)
    total = 0.0
    edges = np.linspace(-half_width_mult, half_width_mult, panels + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes
        total += 0.5 * (hi - lo) * np.sum(weights * np.exp(-u * u))
    return total / math.sqrt(math.pi)


def oscillator_residual(lam, z):
    """Relative residual of the ground-state eigenvalue identity.

    Uses the analytic second derivative of the Gaussian; the result measures
    only floating-point noise of the assembled identity.
    """
    z = np.asarray(z, dtype=float)
    lam6 = lam**6
    psi = np.exp(-lam6 * z * z / 2.0)  # common prefactor cancels
    psi_pp = (lam6 * lam6 * z * z - lam6) * psi
    lhs = -psi_pp + lam6 * lam6 * z * z * psi
    return np.abs(lhs - lam6 * psi) / (lam6 * np.abs(psi))


# Gevrey bumps --------------------------------------------------------------------

class GevreyBump:
    """Flat-core bump of Gevrey order ``s``: 1 on [-core, core], 0 outside
    [-support, support], transitions by the scaled primitive of the basic
    Gevrey seed ``exp(-(1-u^2)^(-alpha))`` with ``alpha = 1/(s-1)``.
    """

    _TABLE_N = 4096

    def __init__(self, s, core, support):
        if not s > 1:
            raise ConfigError(f"Gevrey order must exceed 1, got {s}")
        if not 0 < core < support:
            raise ConfigError("need 0 < core < support")
        self.s = float(s)
        self.alpha = 1.0 / (self.s - 1.0)
        self.core = float(core)
        self.support = float(support)
        self._build_table()
        self._poly_cache = {}

    # seed and its derivatives

    def _seed(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        inside = np.abs(u) < 1.0
        w = 1.0 - u[inside] ** 2
        out[inside] = np.exp(-(w ** (-self.alpha)))
        return out

    def _g_poly(self, m):
        """P_m with g^(m)(u) = P_m(u) * (1-u^2)^(-alpha-m), g = -(1-u^2)^(-alpha)."""
        if m in self._poly_cache:
            return self._poly_cache[m]
        if m == 0:
            poly = np.polynomial.Polynomial([-1.0])
        else:
            p = self._g_poly(m - 1)
            w = np.polynomial.Polynomial([1.0, 0.0, -1.0])  # 1 - u^2
            u = np.polynomial.Polynomial([0.0, 1.0])
            poly = p.deriv() * w + 2.0 * (self.alpha + m - 1) * u * p
        self._poly_cache[m] = poly
        return poly

    def _seed_derivative(self, u, k):
        """k-th derivative of the seed, analytic recurrence (vectorized)."""
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) < 1.0
        w = 1.0 - u[inside] ** 2
        b = [np.zeros_like(u) for _ in range(k + 1)]
        b[0][inside] = np.exp(-(w ** (-self.alpha)))
        gders = {}
        for m in range(1, k + 1):
            gders[m] = np.zeros_like(u)
            gders[m][inside] = self._g_poly(m)(u[inside]) * w ** (-self.alpha - m)
        for j in range(1, k + 1):
            acc = np.zeros_like(u)
            for i in range(j):
                acc += math.comb(j - 1, i) * gders[i + 1] * b[j - 1 - i]
            b[j] = acc
        return b[k]

    def _build_table(self):
        n = self._TABLE_N
        edges = np.linspace(-1.0, 1.0, n + 1)
        nodes, weights = gl_nodes(16)
        cell = np.zeros(n)
        for i in range(n):
            mid = 0.5 * (edges[i] + edges[i + 1])
            half = 0.5 * (edges[i + 1] - edges[i])
            cell[i] = half * np.sum(weights * self._seed(mid + half * nodes))
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        self._z_norm = cum[-1]
        self._table_u = edges
        self._table_t = cum / self._z_norm
        self._table_tp = self._seed(edges) / self._z_norm

    def _transition(self, v):
        """Primitive of the seed, normalized to rise 0 -> 1 on [-1, 1].

        Cubic Hermite interpolation of the tabulated primitive; the analytic
        node derivatives keep the error at the h^4 scale (~1e-14).
        """
        v = np.clip(np.asarray(v, dtype=float), -1.0, 1.0)
        idx = np.clip(np.searchsorted(self._table_u, v) - 1, 0, self._TABLE_N - 1)
        u0 = self._table_u[idx]
        h = self._table_u[idx + 1] - u0
        t = (v - u0) / h
        y0, y1 = self._table_t[idx], self._table_t[idx + 1]
        d0, d1 = self._table_tp[idx] * h, self._table_tp[idx + 1] * h
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        return h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1

    def _map(self, x):
        """Affine map of the rising edge [-support, -core] onto [-1, 1]."""
        return (2.0 * np.asarray(x, dtype=float) + self.support + self.core) / (
            self.support - self.core
        )

    def value(self, x):
        scalar = np.isscalar(x) or np.asarray(x).ndim == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        ax = np.abs(x)
        out[ax <= self.core] = 1.0
        edge = (ax > self.core) & (ax < self.support)
        out[edge] = self._transition(self._map(-ax[edge]))
        return float(out[0]) if scalar else out

    def derivative(self, x, k):
        """k-th derivative, exact through the seed recurrence."""
        if k == 0:
            return self.value(x)
        scalar = np.isscalar(x) or np.asarray(x).ndim == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        ax = np.abs(x)
        edge = (ax > self.core) & (ax < self.support)
        scale = 2.0 / (self.support - self.core)
        seed_d = self._seed_derivative(self._map(-ax[edge]), k - 1)
        vals = seed_d * scale**k / self._z_norm
        sign = np.where(x[edge] > 0, (-1.0) ** k, 1.0)
        out[edge] = sign * vals
        return float(out[0]) if scalar else out


class TimeProfile:
    """Smooth time cutoff: 0 for t <= -2*eps_t, 1 for t >= -eps_t (up to the
    far positive shutdown at 2.5..3 t_star). Only smoothness is required of
    it; the same transition machinery as the Gevrey bumps is used.
    """

    def __init__(self, eps_t, t_star, order=2.0):
        if not eps_t < 0.5 * t_star:
            raise ConfigError(f"eps_t = {eps_t} too large for t_star = {t_star}")
        self.eps_t = float(eps_t)
        self.t_star = float(t_star)
        self._bump = GevreyBump(order, core=1.0, support=2.0)

    def value(self, t):
        scalar = np.isscalar(t) or np.asarray(t).ndim == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        # rising edge on [-2 eps, -eps]; flat 1 until 2.5 t*; falls on
        # [2.5 t*, 3 t*]
        u_rise = np.clip((t + 2 * self.eps_t) / self.eps_t, 0.0, 1.0)
        rise = self._bump._transition(2.0 * u_rise - 1.0)
        u_fall = np.clip((t - 2.5 * self.t_star) / (0.5 * self.t_star), 0.0, 1.0)
        fall = self._bump._transition(2.0 * u_fall - 1.0)
        out = rise * (1.0 - fall)
        return float(out[0]) if scalar else out

    def derivative(self, t, k):
        if k == 0:
            return self.value(t)
        scalar = np.isscalar(t) or np.asarray(t).ndim == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(t.shape)
        rising = (t > -2 * self.eps_t) & (t < -self.eps_t)
        if rising.any():
            v = 2.0 * (t[rising] + 2 * self.eps_t) / self.eps_t - 1.0
            scale = 2.0 / self.eps_t
            out[rising] = (
                self._bump._seed_derivative(v, k - 1)
                * scale**k
                / self._bump._z_norm
            )
        falling = (t > 2.5 * self.t_star) & (t < 3.0 * self.t_star)
        if falling.any():
            v = 2.0 * (t[falling] - 2.5 * self.t_star) / (0.5 * self.t_star) - 1.0
            scale = 2.0 / (0.5 * self.t_star)
            out[falling] = (
                -self._bump._seed_derivative(v, k - 1)
                * scale**k
                / self._bump._z_norm
            )
        return float(out[0]) if scalar else out


@dataclass
class CutoffFamily:
    """Nested product cutoffs: time profile plus three spatial Gevrey bumps.

    Half-width convention per axis with base width ``delta`` for x and 1 for
    y and z: flat core (= K1) at 0.5, support at 0.9, inner observation box
    K0 at 0.25.
    """

    chi_t: TimeProfile
    chi_x: GevreyBump
    chi_y: GevreyBump
    chi_z: GevreyBump
    delta: float
    s_prime: float
    t_star: float
    eps_t: float
    k0: dict
    k1: dict
    k2: dict

    @classmethod
    def build(cls, delta, s_prime, t_star, c0=1.0,
              widths=(0.25, 0.5, 0.9)):
        eps_t = c0 * math.sqrt(delta)
        w0, w1, w2 = widths
        k0 = {"x": w0 * delta, "y": w0, "z": w0}
        k1 = {"x": w1 * delta, "y": w1, "z": w1}
        k2 = {"x": w2 * delta, "y": w2, "z": w2}
        return cls(
            chi_t=TimeProfile(eps_t, t_star),
            chi_x=GevreyBump(s_prime, core=k1["x"], support=k2["x"]),
            chi_y=GevreyBump(s_prime, core=k1["y"], support=k2["y"]),
            chi_z=GevreyBump(s_prime, core=k1["z"], support=k2["z"]),
            delta=delta,
            s_prime=s_prime,
            t_star=t_star,
            eps_t=eps_t,
            k0=k0,
            k1=k1,
            k2=k2,
        )

    def spatial_value(self, x, y, z):
        return (
            self.chi_x.value(x) * self.chi_y.value(y) * self.chi_z.value(z)
        )


# Separated field -----------------------------------------------------------------

@dataclass
class SeparatedField:
    """The exact null field assembled from a recessive oracle trace."""

    params: object
    trace: object

    def _w_scaled(self, x):
        xx = self.params.lam**2 * np.atleast_1d(np.asarray(x, dtype=float))
        return self.trace.eval_scaled_many(xx)

    def modulus_log(self, t, x, y, z):
        """log |V| = gamma lam t + log psi(z) + log |W(lam^2 x)|; y-free."""
        p = self.params
        w, _, lf = self._w_scaled(x)
        logw = np.log(np.abs(w)) + lf
        return float(
            p.gamma * p.lam * t + hermite_ground_log(p.lam, z) + logw[0]
        )

    def value_log(self, t, x, y, z):
        """Full field value as a log-scaled complex number."""
        p = self.params
        w, _, lf = self._w_scaled(x)
        phase = p.sigma * p.lam**2 * t + p.cap_lambda * y
        pref = LogScaledComplex(
            p.gamma * p.lam * t + float(hermite_ground_log(p.lam, z)), phase
        )
        return pref.combine(LogScaledComplex.from_complex(complex(w[0]))).combine(
            LogScaledComplex(float(lf[0]), 0.0)
        )


def reduction_identity(params):
    """Coefficient-level check of the rescaling reduction.

    The raw x-side operator divided by lam^4 under ``x = X / lam^2`` must
    match the reduced operator coefficient by coefficient. Returns the
    maximum relative mismatch over the four coefficients.
    """
    lam = params.lam
    tau = params.tau_lambda
    s, g = params.sigma, params.gamma
    lhs = {
        "dxx": -1.0 + 0j,
        "x3": lam**2 + 0j,
        "x1": 2.0 * tau,
        "x0": lam**2 - tau * tau / lam**4,
    }
    rhs = {
        "dxx": -1.0 + 0j,
        "x3": lam**2 + 0j,
        "x1": 2.0 * s * lam**2 - 2j * g * lam,
        "x0": lam**2 - s * s + 2j * s * g / lam + g * g / lam**2,
    }
    worst = 0.0
    for key in lhs:
        scale = max(abs(lhs[key]), abs(rhs[key]), 1e-300)
        worst = max(worst, abs(lhs[key] - rhs[key]) / scale)
    return worst


def residual_q(field, point, w_override=None):
    """Relative residual of the model operator applied to the field.

    Analytic derivatives in t, y, z; finite differences in x for the second
    derivative of W, so a nonzero residual measures pure discretization.
    ``w_override = (W, W', W'')`` substitutes a synthetic non-solution.
    """
    t, x, y, z = point
    p = field.params
    lam = p.lam
    tau = p.tau_lambda
    big_x = lam**2 * x
    if w_override is None:
        tr = field.trace
        h = 0.01 * 2 * math.pi / (lam * (1 + abs(big_x)) ** 1.5)
        pts = big_x + h * np.arange(-2, 3)
        w, _, lf = tr.eval_scaled_many(pts)
        ref = lf[2]
        vals = w * np.exp(lf - ref)
        w0 = vals[2]
        wpp = (-vals[4] + 16 * vals[3] - 30 * vals[2] + 16 * vals[1] - vals[0]) / (
            12 * h * h
        )
    else:
        w0, _, wpp = w_override
    # oscillator part of the z factor contributes exactly lam^6
    poly = -tau * tau + 2 * x * tau * lam**6 + x**3 * lam**12 + lam**6
    t1 = -(lam**4) * wpp
    t2 = poly * w0
    denom = abs(t1) + abs(t2)
    return abs(t1 + t2) / denom if denom > 0 else 0.0


def commutator_field(field, cutoffs, point):
    """The commutator of the operator with the product cutoff, at one point.

    A first-order operator in the cutoff derivatives; exercises every
    coefficient (including the x, x^3, z^2 weights). Returns a log-scaled
    complex value; exact zero (log -inf) wherever all cutoff derivatives
    vanish.
    """
    t, x, y, z = point
    p = field.params
    lam = p.lam
    tau = p.tau_lambda
    lam6 = p.cap_lambda

    ct = float(cutoffs.chi_t.value(t))
    ctp = float(cutoffs.chi_t.derivative(t, 1))
    ctpp = float(cutoffs.chi_t.derivative(t, 2))
    cx = float(cutoffs.chi_x.value(x))
    cxp = float(cutoffs.chi_x.derivative(x, 1))
    cxpp = float(cutoffs.chi_x.derivative(x, 2))
    cy = float(cutoffs.chi_y.value(y))
    cyp = float(cutoffs.chi_y.derivative(y, 1))
    cypp = float(cutoffs.chi_y.derivative(y, 2))
    cz = float(cutoffs.chi_z.value(z))
    czp = float(cutoffs.chi_z.derivative(z, 1))
    czpp = float(cutoffs.chi_z.derivative(z, 2))

    if ctp == ctpp == cxp == cxpp == cyp == cypp == czp == czpp == 0.0:
        return LogScaledComplex(float("-inf"), 0.0)

    w, wp, lf = field._w_scaled(x)
    w0, wp0, lf0 = complex(w[0]), complex(wp[0]), float(lf[0])
    wx = lam**2 * wp0  # d/dx of W(lam^2 x), unit scale

    gamma_xyz = cx * cy * cz
    coeff_w = (
        ctpp * gamma_xyz
        + 2j * tau * ctp * gamma_xyz
        + 2 * x * (-ctp * cyp * cx * cz - 1j * lam6 * ctp * gamma_xyz
                   - 1j * tau * cyp * ct * cx * cz)
        - cxpp * ct * cy * cz
        + x**3 * (-cypp * ct * cx * cz - 2j * lam6 * cyp * ct * cx * cz)
        - czpp * ct * cx * cy
        + 2 * lam6 * z * czp * ct * cx * cy
        + z**2 * (-cypp * ct * cx * cz - 2j * lam6 * cyp * ct * cx * cz)
    )
    coeff_wx = -2.0 * cxp * ct * cy * cz
    combo = coeff_w * w0 + coeff_wx * wx
    phase = p.sigma * lam**2 * t + lam6 * y
    pref = LogScaledComplex(
        p.gamma * lam * t + float(hermite_ground_log(lam, z)) + lf0, phase
    )
    return pref.combine(LogScaledComplex.from_complex(combo))


def export_samples_csv(path, field, points, cutoffs=None, header_lines=()):
    """Write (t, x, y, z, log_mod, arg) rows for the field at the points.

    With ``cutoffs`` the commutator value is exported instead of the field.
    """
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t,x,y,z,log_mod,arg\n")
        for t, x, y, z in points:
            if cutoffs is None:
                v = field.value_log(t, x, y, z)
            else:
                v = commutator_field(field, cutoffs, (t, x, y, z))
            fh.write(
                f"{t:.17g},{x:.17g},{y:.17g},{z:.17g},"
                f"{v.log_mod:.17g},{v.arg:.17g}\n"
            )


def lower_bound_t_star(field, cutoffs, t_star, c2=0.4, z_mult=6.0, n_x=201):
    """Half the log of the squared-field integral over the inner box.

    Region: |x| <= c2 / lam^3 times the inner y interval times
    |z| <= z_mult / lam^3; everything must sit inside the flat box K0 so the
    cutoffs are exactly 1 there.
    """
    p = field.params
    lam = p.lam
    if c2 / lam**3 > cutoffs.k0["x"]:
        raise ConfigError(
            f"x-region {c2 / lam**3:.3g} exceeds K0 x half-width "
            f"{cutoffs.k0['x']:.3g}"
        )
    if z_mult / lam**3 > cutoffs.k0["z"]:
        raise ConfigError("z-region exceeds K0 z half-width")
    if not t_star >= cutoffs.eps_t:
        raise ConfigError(f"t_star = {t_star} below eps_t = {cutoffs.eps_t}")

    # x integral in the scaled variable: lam^-2 int |W|^2 dX over |X| <= c2/lam
    xs = np.linspace(-c2 / lam, c2 / lam, n_x)
    w, _, lf = field.trace.eval_scaled_many(xs)
    ref = float(np.max(lf))
    vals = np.abs(w) ** 2 * np.exp(2.0 * (lf - ref))
    x_int_log = (
        math.log(np.trapezoid(vals, xs)) + 2.0 * ref - 2.0 * math.log(lam)
    )
    y_len = 2.0 * cutoffs.k0["y"]
    z_int_log = math.log(hermite_mass(lam, z_mult))
    total = 2.0 * p.gamma * lam * t_star + x_int_log + math.log(y_len) + z_int_log
    return 0.5 * total
