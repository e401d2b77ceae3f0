"""Discrete Gevrey-Sobolev norms via FFT, decay profiles, and data norms.

Conventions: on a grid ``x_j = -L + j*dx`` the continuous transform is
approximated by ``fhat(xi_k) = dx * exp(i L xi_k) * FFT(f)_k`` with
``xi_k = 2 pi k / (n dx)``, and Parseval reads
``int |f|^2 dx = (1/(n dx)) sum |fhat|^2``. The weighted norm squares carry
``exp(2 rho <xi>^(1/s)) <xi>^(2N)`` and are accumulated with log-sum-exp so
exponentially weighted tails cannot overflow.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, ConfigError, DynamicRangeError
from .nullsolution import hermite_ground

SUPPORT_FRACTION = 0.7
NYQUIST_MARGIN = 4.0


@dataclass(frozen=True)
class Grid1D:
    """Uniform symmetric grid on [-extent, extent) with a power-of-two count."""

    extent: float
    count: int

    def __post_init__(self):
        if self.count & (self.count - 1):
            raise ConfigError(f"grid count {self.count} is not a power of two")
        if not self.extent > 0:
            raise ConfigError("grid extent must be positive")

    @property
    def dx(self):
        return 2.0 * self.extent / self.count

    @property
    def x(self):
        return -self.extent + self.dx * np.arange(self.count)

    @property
    def xi(self):
        return 2.0 * math.pi * np.fft.fftfreq(self.count, d=self.dx)

    @property
    def nyquist(self):
        return math.pi / self.dx


@dataclass(frozen=True)
class WeightedNormSpec:
    """(rho, N, s) weight plus per-axis grid geometry."""

    rho: float
    n_order: int
    s: float
    grids: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if self.n_order < 1:
            raise ConfigError("Sobolev order must be >= 1")
        if not self.s > 1:
            raise ConfigError("Gevrey index s must exceed 1")

    def validate_for_lambda(self, lam):
        need = NYQUIST_MARGIN * lam**6
        for name, grid in self.grids.items():
            if grid.nyquist < need:
                raise ConfigError(
                    f"{name}-grid Nyquist {grid.nyquist:.3g} below "
                    f"{NYQUIST_MARGIN} * lam^6 = {need:.3g}"
                )


def _next_pow2(n):
    p = 1
    while p < n:
        p *= 2
    return p


def build_norm_spec(lam_max, delta, rho=0.5, n_order=2, s=7.0,
                    extent_x=None, extent_yz=1.3):
    """Grids sized so the largest lam keeps Nyquist >= 4 lam^6 per axis."""
    if extent_x is None:
        extent_x = delta / SUPPORT_FRACTION
    need_dx = math.pi / (NYQUIST_MARGIN * lam_max**6)
    grids = {
        "x": Grid1D(extent_x, _next_pow2(int(math.ceil(2 * extent_x / need_dx)))),
        "y": Grid1D(extent_yz, _next_pow2(int(math.ceil(2 * extent_yz / need_dx)))),
        "z": Grid1D(extent_yz, _next_pow2(int(math.ceil(2 * extent_yz / need_dx)))),
    }
    return WeightedNormSpec(rho=rho, n_order=n_order, s=s, grids=grids)


def transform(samples, grid):
    """Continuous-convention Fourier transform of gridded samples."""
    samples = np.asarray(samples, dtype=complex)
    if samples.shape != (grid.count,):
        raise ConfigError("sample count does not match the grid")
    xi = grid.xi
    fhat = grid.dx * np.exp(1j * grid.extent * xi) * np.fft.fft(samples)
    return xi, fhat


def _check_support(samples, grid, level=1e-10):
    """Numerical support must stay inside 70% of the extent.

    Tails below ``level`` of the peak wrap around at an amplitude below any
    tolerance asserted on the log-norms.
    """
    mags = np.abs(samples)
    peak = mags.max()
    if peak == 0.0:
        return False
    live = np.abs(grid.x[mags > level * peak])
    if live.size and live.max() > SUPPORT_FRACTION * grid.extent:
        raise AliasingError(
            f"support reaches {live.max():.3g} beyond "
            f"{SUPPORT_FRACTION:.0%} of the grid extent {grid.extent:.3g}"
        )
    return True


def weighted_norm_1d(samples, grid, spec, n_order=None):
    """log of the Gevrey-Sobolev weighted L2 norm of gridded samples.

    Returns -inf for identically zero input.
    """
    if not _check_support(samples, grid):
        return float("-inf")
    if n_order is None:
        n_order = spec.n_order
    xi, fhat = transform(samples, grid)
    mag = np.abs(fhat)
    live = mag > 0
    if not live.any():
        return float("-inf")
    bracket = np.sqrt(1.0 + xi[live] ** 2)
    log_terms = (
        2.0 * spec.rho * bracket ** (1.0 / spec.s)
        + 2.0 * n_order * np.log(bracket)
        + 2.0 * np.log(mag[live])
    )
    top = float(np.max(log_terms))
    total = top + math.log(float(np.sum(np.exp(log_terms - top))))
    return 0.5 * (total - math.log(grid.count * grid.dx))


@dataclass
class DecayProfile:
    """Fitted plateau-plus-stretched-tail shape of a transform modulus."""

    plateau_edge: float
    stretch_exponent: float
    decay_rate: float
    fit_residual: float
    n_tail: int


def decay_profile(samples, lam, s_prime, grid, floor_rel=1e-12, min_points=24,
                  tail_start_neglog=0.0):
    """Plateau edge and stretched-exponential tail fit of the transform.

    The plateau edge is the outermost frequency whose modulus still reaches
    half the peak; the tail decade above ``floor_rel`` of the peak is fitted
    as ``-log(|fhat|/peak) ~ a * dist(xi, plateau)^(1/s0)`` by log-log
    regression, returning the fitted stretch exponent 1/s0 and rate a.
    """
    xi, fhat = transform(samples, grid)
    mag = np.abs(fhat)
    peak = mag.max()
    if peak == 0:
        raise DynamicRangeError("zero input")
    half = np.abs(xi[mag >= 0.5 * peak])
    plateau = float(half.max())
    dist = np.abs(xi) - plateau
    # measured floor: FFT roundoff noise and periodic wraparound both live in
    # the outermost bins; values below ~3x that level are not signal
    outer = np.abs(xi) >= 0.99 * np.abs(xi).max()
    floor_level = max(floor_rel * peak, 3.0 * float(np.max(mag[outer])))
    tail = (dist > 0) & (mag > floor_level) & (mag < 0.05 * peak)
    if np.count_nonzero(tail) < min_points:
        raise DynamicRangeError(
            f"only {np.count_nonzero(tail)} usable tail points above the floor"
        )
    d = dist[tail]
    m = mag[tail] / peak
    # The transform oscillates through near-zeros, so work with the per-bin
    # envelope (max modulus over logarithmic distance bins). The algebraic
    # prefactor of the stretched exponential biases the raw log-log slope
    # over the ~27 e-folds double precision can resolve; since the local
    # slope behaves like p - kappa/(-log m), extrapolate it linearly in
    # 1/(-log m) -> 0.
    n_bins = 28
    edges = np.exp(np.linspace(math.log(d.min()), math.log(d.max()), n_bins + 1))
    lx, ly = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (d >= lo) & (d < hi)
        if not sel.any():
            continue
        top = float(np.max(m[sel]))
        lx.append(0.5 * (math.log(lo) + math.log(hi)))
        ly.append(math.log(-math.log(top)))
    if len(lx) < 8:
        raise DynamicRangeError("too few envelope bins for the tail fit")
    lx = np.asarray(lx)
    ly = np.asarray(ly)
    # optionally drop shallow bins next to the plateau edge: broadband
    # products carry a band-edge smear there that is not part of the
    # stretched regime (pure bumps keep the default and use all bins)
    if tail_start_neglog > 0:
        deep = ly >= math.log(tail_start_neglog)
        if np.count_nonzero(deep) >= 8:
            lx, ly = lx[deep], ly[deep]
    # The raw log-log slope of the tail is biased low over the ~27 e-folds
    # double precision can resolve (algebraic prefactors); since the local
    # slope behaves like p - kappa/(-log m), extrapolate it linearly in
    # 1/(-log m) -> 0. The estimator is reproducible to ~0.06 on canonical
    # flat-core bumps; instances with large carriers or broadband factors
    # carry larger structured errors and their profiles are reporting-grade.
    slopes = np.diff(ly) / np.diff(lx)
    inv = 1.0 / np.exp(0.5 * (ly[1:] + ly[:-1]))
    coeffs = np.polynomial.polynomial.polyfit(inv, slopes, 1)
    stretch = float(coeffs[0])
    resid = float(
        np.sqrt(np.mean((slopes - (coeffs[0] + coeffs[1] * inv)) ** 2))
    )
    # rate from a fixed-exponent least-squares refit of the envelope
    dd = np.exp(lx)
    neg_log = np.exp(ly)
    rate = float(np.sum(neg_log * dd**stretch) / np.sum(dd ** (2 * stretch)))
    return DecayProfile(
        plateau_edge=plateau,
        stretch_exponent=stretch,
        decay_rate=rate,
        fit_residual=resid,
        n_tail=int(np.count_nonzero(tail)),
    )


@dataclass
class DataNorms:
    """Tensorized Gevrey-Sobolev norms of the cutoff Cauchy data (logs)."""

    log_g0: float
    log_g1: float
    factors: dict


def data_norm(field, cutoffs, spec):
    """Norms of the two cutoff data pieces, by per-axis tensorization.

    The three 1-D factor norms multiply (the 3-D bracket weight is dominated
    by the product of the 1-D weights), and the second datum is tau times the
    first, measured one Sobolev order lower.
    """
    p = field.params
    lam = p.lam
    spec.validate_for_lambda(lam)
    gx, gy, gz = spec.grids["x"], spec.grids["y"], spec.grids["z"]

    xs = gx.x
    fx = np.zeros(gx.count, dtype=complex)
    live = np.abs(xs) < cutoffs.k2["x"]
    if live.any():
        w, _ = field.trace.eval_many(lam**2 * xs[live])
        fx[live] = cutoffs.chi_x.value(xs[live]) * w
    fy = cutoffs.chi_y.value(gy.x) * np.exp(1j * p.cap_lambda * gy.x)
    fz = cutoffs.chi_z.value(gz.x) * hermite_ground(lam, gz.x)

    factors = {}
    for name, samples, grid in (("x", fx, gx), ("y", fy, gy), ("z", fz, gz)):
        factors[name] = weighted_norm_1d(samples, grid, spec)
        factors[name + "_lower"] = weighted_norm_1d(
            samples, grid, spec, n_order=spec.n_order - 1
        )
    log_g0 = factors["x"] + factors["y"] + factors["z"]
    log_g0_lower = (
        factors["x_lower"] + factors["y_lower"] + factors["z_lower"]
    )
    log_g1 = math.log(abs(p.tau_lambda)) + log_g0_lower
    return DataNorms(log_g0=log_g0, log_g1=log_g1, factors=factors)


def export_spectrum_csv(path, samples, grid, header_lines=()):
    """Write (xi, log-modulus) of the transform, sorted by frequency."""
    xi, fhat = transform(samples, grid)
    order = np.argsort(xi)
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("xi,log_modulus\n")
        for k in order:
            m = abs(fhat[k])
            lm = math.log(m) if m > 0 else float("-inf")
            fh.write(f"{xi[k]:.17g},{lm:.17g}\n")
