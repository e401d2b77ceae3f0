"""Tests for LG modes, the Volterra refinement, and growth envelopes."""

import numpy as np
import pytest

from wkblab.branchcut import BranchTracker, phase_integral
from wkblab.errors import RegionError
from wkblab.lg import (
    GrowthEnvelope,
    _remainder,
    airy_disk_radius,
    envelope_log,
    fit_growth_envelope,
    lg_evaluate,
    liouville_remainder,
    volterra_amplitude,
)
from wkblab.potential import ModelParams, action, eval_q, real_root

LAMBDAS = [8.0, 16.0, 32.0, 64.0]


def make_params(lam, sigma=5.0, gamma=1.0, delta=0.01):
    return ModelParams(sigma, gamma, delta, lam)


# lg_evaluate ------------------------------------------------------------------

def test_lg_at_basepoint_is_quarter_power():
    p = make_params(16.0)
    v = lg_evaluate(p, 1.0, -1, 1.0)
    q = eval_q(p, 1.0)
    assert v.log_mod == pytest.approx(-0.25 * np.log(abs(q)), abs=1e-12)


def test_lg_minus_mode_log_modulus_identity():
    p = make_params(16.0)
    x, basepoint = 3.0, 0.5
    v = lg_evaluate(p, x, -1, basepoint)
    s = phase_integral(p, [basepoint, x], BranchTracker(p))
    want = -p.lam * s.real - 0.25 * np.log(abs(eval_q(p, x)))
    assert v.log_mod == pytest.approx(want, abs=1e-12)


def test_lg_rejects_airy_disk():
    p = make_params(16.0)
    x_star = real_root(p.sigma).x_star
    with pytest.raises(RegionError):
        lg_evaluate(p, x_star, -1, 1.0)


# liouville_remainder ------------------------------------------------------------

def test_remainder_constant_q_vanishes():
    assert _remainder(2.0 + 0j, 0.0, 0.0) == 0.0


def test_remainder_bounded_uniformly_in_lam():
    xs = np.linspace(0.5, 5.0, 80)
    for lam in LAMBDAS:
        p = make_params(lam)
        vals = np.array([abs(liouville_remainder(p, complex(x))) for x in xs])
        assert vals.max() < 10.0


def test_remainder_matches_finite_differences():
    p = make_params(12.0)
    h = 1e-4
    for x in (0.7, 2.0, 4.0):
        q = eval_q(p, x)
        qp = (eval_q(p, x + h) - eval_q(p, x - h)) / (2 * h)
        qpp = (
            -eval_q(p, x + 2 * h)
            + 16 * eval_q(p, x + h)
            - 30 * q
            + 16 * eval_q(p, x - h)
            - eval_q(p, x - 2 * h)
        ) / (12 * h * h)
        got = liouville_remainder(p, x)
        want = _remainder(q, qp, qpp)
        assert got == pytest.approx(want, rel=1e-6)


def test_remainder_raises_near_turning_point():
    p = make_params(16.0)
    x_star = real_root(p.sigma).x_star
    with pytest.raises(RegionError):
        liouville_remainder(p, complex(x_star), min_mod=1e-1)


# volterra_amplitude -------------------------------------------------------------

def test_volterra_zero_remainder_gives_unit_amplitude():
    p = make_params(8.0)
    res = volterra_amplitude(p, (0.5, 5.0), -1, remainder=lambda x: 0.0)
    assert np.all(res.b == 1.0)
    assert res.iterations == 1


def test_volterra_amplitude_near_one():
    sups = []
    for lam in LAMBDAS:
        p = make_params(lam)
        res = volterra_amplitude(p, (0.5, 5.0), -1)
        sups.append(lam * float(np.max(np.abs(res.b - 1.0))))
    assert max(sups) < 5.0


def test_volterra_gap_ratio_contracts_like_inverse_lam():
    for lam in (8.0, 32.0):
        p = make_params(lam)
        res = volterra_amplitude(p, (0.5, 5.0), -1)
        ratios = [
            res.gaps[k + 1] / res.gaps[k]
            for k in range(len(res.gaps) - 1)
            if res.gaps[k] > 1e-14
        ]
        assert ratios and max(ratios) < 10.0 / lam


def test_volterra_plus_mode_runs():
    p = make_params(16.0)
    res = volterra_amplitude(p, (0.5, 3.0), +1)
    assert float(np.max(np.abs(res.b - 1.0))) < 0.1


# envelope ------------------------------------------------------------------------

def synthetic_envelope_data(sigma, gamma, delta, lambdas):
    a = action(sigma)
    lambdas = np.asarray(lambdas, dtype=float)
    right = 0.4 * np.log(lambdas) + 0.8
    left = a * lambdas + 1.7 * gamma * np.sqrt(delta) * lambdas + right
    return right, left


def test_fit_growth_envelope_recovers_synthetic_constants():
    sigma, gamma, delta = 5.0, 1.0, 0.01
    right, left = synthetic_envelope_data(sigma, gamma, delta, LAMBDAS)
    env = fit_growth_envelope(sigma, gamma, delta, LAMBDAS, right, left)
    assert env.m_fit == pytest.approx(0.4, abs=1e-8)
    assert env.log_c == pytest.approx(0.8 + 0.1, abs=1e-6)  # margin added
    assert env.c_sigma == pytest.approx(1.7, abs=0.15)
    assert env.a_sigma == pytest.approx(action(sigma), abs=1e-10)


def test_envelope_log_regional_shape():
    sigma, gamma, delta = 5.0, 1.0, 0.01
    p = make_params(16.0, sigma, gamma, delta)
    env = GrowthEnvelope(action(sigma), 1.5, gamma, delta, 0.4, 0.8)
    base = 0.4 * np.log(16.0) + 0.8
    assert envelope_log(p, env, 2.0) == pytest.approx(base)
    x_star = real_root(sigma).x_star
    at_root = envelope_log(p, env, x_star)
    assert at_root == pytest.approx(base + 16.0 * action(sigma), abs=0.5)
    left_edge = -delta * 16.0**2
    at_left = envelope_log(p, env, left_edge)
    extra = at_left - at_root
    assert extra == pytest.approx(1.5 * gamma * np.sqrt(abs(left_edge)), abs=1e-9)


def test_envelope_dominates_at_fit_points():
    # The fitted envelope must sit above every data point used in the fit.
    sigma, gamma, delta = 5.0, 1.0, 0.01
    rng = np.random.default_rng(12)
    lambdas = np.array(LAMBDAS)
    right, left = synthetic_envelope_data(sigma, gamma, delta, lambdas)
    right = right + rng.uniform(-0.3, 0.3, right.size)
    left = left + rng.uniform(-0.3, 0.3, left.size)
    env = fit_growth_envelope(sigma, gamma, delta, lambdas, right, left)
    assert np.all(env.m_fit * np.log(lambdas) + env.log_c >= right)
    bound = (
        env.a_sigma * lambdas
        + env.c_sigma * gamma * np.sqrt(delta) * lambdas
        + env.m_fit * np.log(lambdas)
        + env.log_c
    )
    assert np.all(bound >= left)


def test_airy_disk_radius_scales_with_root():
    assert airy_disk_radius(5.0) == pytest.approx(0.3 * abs(real_root(5.0).x_star))
