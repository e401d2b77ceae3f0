"""Cubic potential, perturbed symbol, their roots, and the action integral.

The scenario is a one-parameter family of cubics ``V(X) = X^3 + 2*sigma*X + 1``
together with a large-parameter perturbation ``q(X)`` carrying four correction
terms in inverse powers of ``lam``. This module owns the scenario record
(:class:`ModelParams`), the unique negative real root of the cubic, the action
integral between that root and the origin, and the perturbed complex turning
point near the root.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RootFindError
from .quad import gl_composite

DEFAULT_LAMBDA_MIN = 8.0
ABSOLUTE_LAMBDA_MIN = 2.0


@dataclass(frozen=True)
class ModelParams:
    """Scenario record: (sigma, gamma, delta, lam) plus derived frequencies.

    ``tau_lambda = sigma*lam**2 - 1j*gamma*lam`` is the complex time frequency
    and ``cap_lambda = lam**6`` the tangential frequency. ``lambda_min`` is the
    configured validity floor (>= 2); the production contract requires
    ``gamma > 0``, while :meth:`relaxed` admits ``gamma = 0`` for limit tests.
    """

    sigma: float
    gamma: float
    delta: float
    lam: float
    lambda_min: float = DEFAULT_LAMBDA_MIN
    _allow_zero_gamma: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self._allow_zero_gamma:
            if self.gamma < 0:
                raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        elif not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if self.lambda_min < ABSOLUTE_LAMBDA_MIN:
            raise ConfigError(f"lambda_min must be >= {ABSOLUTE_LAMBDA_MIN}")
        if not self.lam >= self.lambda_min:
            raise ConfigError(
                f"lam = {self.lam} below configured minimum {self.lambda_min}"
            )

    @classmethod
    def relaxed(cls, sigma, gamma, delta, lam, lambda_min=DEFAULT_LAMBDA_MIN):
        """Test-only variant permitting gamma >= 0 (continuity limits)."""
        return cls(sigma, gamma, delta, lam, lambda_min, _allow_zero_gamma=True)

    @property
    def tau_lambda(self):
        return self.sigma * self.lam**2 - 1j * self.gamma * self.lam

    @property
    def cap_lambda(self):
        return self.lam**6


@dataclass
class CubicGeometry:
    """Geometry of the cubic: negative real root, slope there, action."""

    x_star: float
    v_prime_at_root: float
    a_sigma: float | None = None

    def validate(self, sigma):
        assert self.x_star < 0
        assert abs(eval_v(sigma, self.x_star)) <= 1e-12
        assert self.v_prime_at_root > 0
        if self.a_sigma is not None:
            assert 0.0 <= self.a_sigma <= abs(self.x_star)


def eval_v(sigma, x):
    """The cubic ``V(X) = X^3 + 2*sigma*X + 1`` (works on arrays and complex)."""
    return x * x * x + 2.0 * sigma * x + 1.0


def v_prime(sigma, x):
    """``V'(X) = 3X^2 + 2*sigma`` (strictly positive on the reals)."""
    return 3.0 * x * x + 2.0 * sigma


def real_root(sigma, residual_tol=1e-13, max_iter=100):
    """Unique real zero of the cubic, by bracketing bisection then Newton.

    The root lies in (-1/sigma - 1, 0): V(0) = 1 > 0 and the lower endpoint is
    comfortably below the -1/(2 sigma) leading-order location.
    """
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}")
    lo, hi = -1.0 / sigma - 1.0, 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if eval_v(sigma, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = eval_v(sigma, x)
        if abs(f) <= residual_tol:
            geo = CubicGeometry(x_star=x, v_prime_at_root=v_prime(sigma, x))
            return geo
        x -= f / v_prime(sigma, x)
    raise RootFindError(
        f"Newton residual {abs(eval_v(sigma, x)):.3e} > {residual_tol:g} for sigma={sigma}"
    )


def action(sigma, rel_tol=1e-10):
    """Action integral of sqrt(V) over [x_star, 0].

    The square-root endpoint singularity at the root is removed analytically
    by substituting ``r = x_star + u**2``, after which the integrand
    ``2*u*sqrt(V(x_star + u**2))`` is smooth and composite Gauss-Legendre
    converges at the requested relative tolerance.
    """
    geo = real_root(sigma)
    x_star = geo.x_star
    u_max = np.sqrt(-x_star)

    def integrand(u):
        r = x_star + u * u
        v = eval_v(sigma, r)
        return 2.0 * u * np.sqrt(np.maximum(v, 0.0))

    value, _ = gl_composite(integrand, 0.0, u_max, rel_tol=rel_tol)
    return float(value)


def cubic_geometry(sigma):
    """Fully populated CubicGeometry (root, slope, action)."""
    geo = real_root(sigma)
    geo.a_sigma = action(sigma)
    geo.validate(sigma)
    return geo


def eval_q(params, z):
    """Perturbed symbol: the cubic plus four corrections in 1/lam.

    ``q(Z) = V(Z) - 2i*gamma*Z/lam - sigma^2/lam^2 + 2i*sigma*gamma/lam^3
    + gamma^2/lam^4``.
    """
    lam = params.lam
    s, g = params.sigma, params.gamma
    c1 = 2.0 * s - 2j * g / lam
    c0 = 1.0 - s * s / lam**2 + 2j * s * g / lam**3 + g * g / lam**4
    return z * z * z + c1 * z + c0


def q_prime(params, z):
    """Analytic derivative of the perturbed symbol."""
    return 3.0 * z * z + 2.0 * params.sigma - 2j * params.gamma / params.lam


def q_second(params, z):
    """Analytic second derivative of the perturbed symbol."""
    return 6.0 * z


def turning_point(params, residual_tol=1e-13, max_iter=80):
    """Unique zero of the perturbed symbol near the cubic's real root.

    Newton iteration started at the real root; the zero sits slightly below
    the real axis for gamma > 0. Raises RootFindError if the iteration leaves
    the disk of radius ``|x_star|/2`` around the root (signals lam below the
    expansion's validity).
    """
    geo = real_root(params.sigma)
    x_star = geo.x_star
    z = complex(x_star)
    trust = 0.5 * abs(x_star)
    for _ in range(max_iter):
        f = eval_q(params, z)
        if abs(f) <= residual_tol:
            return z
        z = z - f / q_prime(params, z)
        if abs(z - x_star) > trust:
            raise RootFindError(
                f"turning-point Newton left trust disk around {x_star:.6g} "
                f"(lam={params.lam} likely below validity)"
            )
    raise RootFindError(
        f"turning-point Newton residual {abs(eval_q(params, z)):.3e} > {residual_tol:g}"
    )


def symbol_zero(params, residual_tol=1e-13):
    """The zero of the perturbed symbol near the real axis, found robustly.

    Unlike :func:`turning_point` this makes no smallness assumption on the
    corrections: at moderate lam the sigma^2/lam^2 shift moves the zero an
    O(1) distance from the cubic's root. Bisection on the real part (strictly
    increasing in X) gives the real abscissa; complex Newton polishes. The
    imaginary part stays negative for gamma > 0 because the zero abscissa
    always lies left of sigma/lam^2.
    """
    lam, s, g = params.lam, params.sigma, params.gamma
    shift = s * s / lam**2 - g * g / lam**4

    def re_part(x):
        return eval_v(s, x) - shift

    lo = -abs(shift) - 1.0 / s - 1.0
    hi = abs(shift) + 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if re_part(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    z = complex(0.5 * (lo + hi))
    for _ in range(60):
        f = eval_q(params, z)
        if abs(f) <= residual_tol:
            return z
        z = z - f / q_prime(params, z)
    raise RootFindError(
        f"symbol-zero Newton residual {abs(eval_q(params, z)):.3e} > {residual_tol:g}"
    )
