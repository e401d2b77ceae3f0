"""Tests for the in-repo Airy pair and the Liouville-Airy chart machinery."""

import cmath
import math

import numpy as np
import pytest

from wkblab.airy import (
    AiryChart,
    airy_coordinate,
    airy_eval,
    airy_eval_log,
    fit_uniform_representation,
    schwarzian_r,
    _schwarzian_at,
)
from wkblab.errors import RegionError, StencilError
from wkblab.potential import ModelParams, eval_q, q_prime, symbol_zero

LAMBDAS = [8.0, 16.0, 32.0, 64.0]


def make_params(lam, sigma=5.0, gamma=1.0, delta=0.01):
    return ModelParams(sigma, gamma, delta, lam)


# Airy evaluation ---------------------------------------------------------------

def test_values_at_zero_closed_forms():
    p = airy_eval(0.0)
    assert p.ai == pytest.approx(3.0 ** (-2 / 3) / math.gamma(2 / 3), rel=1e-14)
    assert p.ai_prime == pytest.approx(-(3.0 ** (-1 / 3)) / math.gamma(1 / 3), rel=1e-14)
    assert p.bi == pytest.approx(math.sqrt(3) * p.ai.real, rel=1e-14)
    assert p.bi_prime == pytest.approx(-math.sqrt(3) * p.ai_prime.real, rel=1e-14)


def test_classical_values_at_one():
    p = airy_eval(1.0)
    assert p.ai.real == pytest.approx(0.135292416312881, rel=1e-12)
    assert p.bi.real == pytest.approx(1.207423594952871, rel=1e-12)


def test_wronskian_small_arguments():
    rng = np.random.default_rng(21)
    z = rng.uniform(-4, 4, 1000) + 1j * rng.uniform(-4, 4, 1000)
    z = z[np.abs(z) <= 4.0]
    for zi in z:
        p = airy_eval(zi)
        assert p.wronskian() == pytest.approx(1.0 / math.pi, rel=1e-10)


def test_wronskian_all_branches():
    # the identity is a cancellation of size exp(2|Re zeta|); it is only
    # testable where the products stay within ~e^16 of the answer
    rng = np.random.default_rng(22)
    tested = 0
    for _ in range(300):
        r = rng.uniform(0.1, 30.0)
        th = rng.uniform(-math.pi, math.pi)
        z = r * cmath.exp(1j * th)
        lp = airy_eval_log(z)
        p1 = lp.ai.combine(lp.bi_prime)
        if p1.log_mod - math.log(1.0 / math.pi) > 16.0:
            continue
        w = p1.add(lp.ai_prime.combine(lp.bi).scaled(-1.0)).to_complex()
        assert w == pytest.approx(1.0 / math.pi, rel=1e-8)
        tested += 1
    assert tested > 100


def test_branch_overlap_series_vs_continuation():
    # values just inside and outside the series radius agree to 1e-10
    rng = np.random.default_rng(23)
    for _ in range(40):
        th = rng.uniform(-math.pi, math.pi)
        za = 4.39 * cmath.exp(1j * th)
        zb = 4.41 * cmath.exp(1j * th)
        pa, pb = airy_eval(za), airy_eval(zb)
        # smoothness proxy: both branches evaluated at the same midpoint
        zm = 4.4 * cmath.exp(1j * th)
        from wkblab.airy import _series_pair, _ai_core_log

        ai_series = _series_pair(zm)[0]
        ai_cont = _ai_core_log(zm * (1 + 1e-15))[0].to_complex()
        assert ai_cont == pytest.approx(ai_series, rel=1e-10)
        assert abs(pa.ai - pb.ai) < 0.2 * max(abs(pa.ai), abs(pb.ai)) + 1e-12


def test_branch_overlap_continuation_vs_asymptotic():
    from wkblab.airy import _asym_ai_log, _ai_core_log

    rng = np.random.default_rng(24)
    for _ in range(30):
        th = rng.uniform(-2 * math.pi / 3, 2 * math.pi / 3)
        z = 10.99 * cmath.exp(1j * th)
        ai_mid = _ai_core_log(z)[0]
        ai_asym = _asym_ai_log(z)[0]
        assert ai_mid.to_complex() == pytest.approx(ai_asym.to_complex(), rel=1e-10)


def test_connection_identity():
    # Ai(z) + w*Ai(w z) + w2*Ai(w2 z) = 0 with w = exp(2 pi i/3)
    w = cmath.exp(2j * math.pi / 3)
    rng = np.random.default_rng(25)
    for _ in range(50):
        z = complex(rng.uniform(-6, 6), rng.uniform(-6, 6))
        s = (
            airy_eval(z).ai
            + w * airy_eval(w * z).ai
            + w * w * airy_eval(w * w * z).ai
        )
        scale = max(abs(airy_eval(z).ai), abs(airy_eval(w * z).ai), 1e-30)
        assert abs(s) <= 1e-9 * scale


def test_large_positive_argument_asymptotic_identity():
    # the exact first correction at x = 20 is 5/(72 zeta) = 1.16e-3, so the
    # identity holds at 2e-3 but cannot hold at 1e-3
    x = 20.0
    p = airy_eval_log(x)
    val = p.ai.to_complex() * 2 * math.sqrt(math.pi) * x**0.25 * math.exp(
        (2.0 / 3.0) * x**1.5
    )
    assert val.real == pytest.approx(1.0, abs=2e-3)
    assert abs(val.imag) < 1e-12


def test_reflection_symmetry_real_axis():
    rng = np.random.default_rng(26)
    for _ in range(30):
        z = complex(rng.uniform(-8, 8), rng.uniform(0.1, 8))
        p = airy_eval(z)
        q = airy_eval(z.conjugate())
        assert q.ai == pytest.approx(p.ai.conjugate(), rel=1e-10)
        assert q.bi == pytest.approx(p.bi.conjugate(), rel=1e-10)


def test_log_scaled_output_beyond_plain_range():
    p = airy_eval_log(500.0)
    # 2/3 * 500^1.5 ~ 7453: far outside plain floating range either way
    assert p.ai.log_mod < -7000
    assert p.bi.log_mod > 7000
    with pytest.raises(RegionError):
        airy_eval(2000.0)


def test_degraded_flag_near_airy_zero():
    # bisect a zero of the first member on the far negative axis; evaluating
    # at the zero forces near-total cancellation in the connection sum
    lo, hi = -39.6, -39.3
    flo = airy_eval(complex(lo)).ai.real
    assert flo * airy_eval(complex(hi)).ai.real < 0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        fm = airy_eval(complex(mid)).ai.real
        if fm * flo > 0:
            lo, flo = mid, fm
        else:
            hi = mid
    p = airy_eval(complex(0.5 * (lo + hi)))
    assert p.precision_degraded
    # and a benign point nearby is not flagged
    assert not airy_eval(complex(lo) + 0.2).precision_degraded


# Airy coordinate ----------------------------------------------------------------

def test_zeta_vanishes_at_turning_point():
    p = make_params(16.0)
    assert airy_coordinate(p, symbol_zero(p)) == 0.0


def test_zeta_real_positive_right_of_turning_point():
    # zeta carries a small constant imaginary part ~ |Im X_lam| * qp^(1/3)
    # because the turning point sits below the axis; away from the center the
    # real part dominates it
    p = make_params(16.0)
    chart = AiryChart.build(p)
    right = chart.zeta[chart.x > chart.center.real + 0.02]
    assert np.all(right.real > 0)
    assert np.all(np.abs(right.imag) < 0.1 * np.abs(right.real))


def test_zeta_negative_real_left_of_turning_point():
    p = make_params(16.0)
    chart = AiryChart.build(p)
    left = chart.zeta[chart.x < chart.center.real - 0.01]
    assert np.all(left.real < 0)
    assert np.all(np.abs(left.imag) < 0.15 * np.abs(left.real))


def test_zeta_prime_cube_root_at_center():
    p = make_params(16.0)
    qp = q_prime(p, symbol_zero(p))
    d = 1e-5
    z1 = airy_coordinate(p, symbol_zero(p) + d)
    assert z1 / d == pytest.approx(qp ** (1 / 3), rel=1e-4)


def test_chart_identity_zeta_prime_squared_times_zeta():
    for lam in LAMBDAS:
        p = make_params(lam)
        chart = AiryChart.build(p, n=201)
        sl = chart.interior()
        lhs = chart.zeta_prime[sl] ** 2 * chart.zeta[sl]
        rhs = eval_q(p, chart.x[sl].astype(complex))
        rel = np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-12)
        assert rel.max() < 1e-8


# Uniform representation fit -------------------------------------------------------


class SyntheticAiryTrace:
    """Trace stub whose field is exactly the recessive Airy branch."""

    def __init__(self, params, chart):
        self.params = params
        self.chart = chart

    def eval_many(self, xs):
        lam = self.params.lam
        mu = lam ** (2.0 / 3.0)
        w = np.empty(len(xs), dtype=complex)
        wp = np.empty(len(xs), dtype=complex)
        for i, x in enumerate(xs):
            zeta = airy_coordinate(self.params, x)
            # analytic zeta' from the defining identity
            zp = np.sqrt(eval_q(self.params, complex(x)) / zeta) if zeta != 0 else 0
            pair = airy_eval(mu * zeta)
            w[i] = pair.ai
            wp[i] = mu * zp * pair.ai_prime
        return w, wp


def test_fit_recovers_synthetic_airy_branch():
    p = make_params(16.0)
    chart = AiryChart.build(p, n=81)
    trace = SyntheticAiryTrace(p, chart)
    fit = fit_uniform_representation(p, chart, trace)
    good = fit.ok
    assert np.max(np.abs(fit.b0[good] - 1.0)) < 1e-5
    assert np.max(np.abs(fit.b1[good])) < 1e-5 * p.lam ** (4 / 3)
    assert fit.max_residual < 1e-6


# Schwarzian ------------------------------------------------------------------------

def test_schwarzian_affine_map_vanishes():
    x = np.linspace(-1.0, 1.0, 101)
    chart = AiryChart(center=0j, radius=1.0, x=x, zeta=(2.0 + 0j) * x + 0.3)
    assert abs(_schwarzian_at(chart, 50)) < 1e-8


def test_schwarzian_bounded_on_chart():
    for lam in LAMBDAS:
        p = make_params(lam)
        chart = AiryChart.build(p, n=161)
        sl = chart.interior(margin=4)
        vals = [abs(_schwarzian_at(chart, i)) for i in range(sl.start, sl.stop, 8)]
        assert max(vals) < 50.0


def test_schwarzian_halved_step_agreement():
    p = make_params(16.0)
    c1 = AiryChart.build(p, n=81)
    c2 = AiryChart.build(p, n=161)
    z0 = c1.zeta[40]  # same physical location exists in both charts
    r1 = schwarzian_r(p, z0, c1)
    r2 = schwarzian_r(p, z0, c2)
    assert abs(r1 - r2) <= 1e-4 * max(1.0, abs(r2))


def test_schwarzian_edge_raises():
    p = make_params(16.0)
    chart = AiryChart.build(p, n=81)
    with pytest.raises(StencilError):
        _schwarzian_at(chart, 1)
