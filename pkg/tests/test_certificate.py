"""Tests for the certificate sweep and the threshold report."""

import math

import numpy as np
import pytest

from wkblab.certificate import CertificateRow, SweepConfig, sweep, threshold_report
from wkblab.errors import ConfigError
from wkblab.potential import action


def small_config(**kw):
    base = dict(
        fft_lambdas=(3.0, 4.0, 5.0),
        ode_lambdas=(8.0, 12.0, 16.0),
    )
    base.update(kw)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def default_sweep():
    cfg = small_config()
    rows, meta = sweep(cfg)
    return cfg, rows, meta


# exponent arithmetic ---------------------------------------------------------------

def test_correction_exponent_arithmetic():
    assert 6.0 / 7.0 - 1.0 < 0
    assert 6.0 / 6.0 - 1.0 == 0.0
    assert 6.0 / 5.5 - 1.0 > 0


def test_config_validation():
    with pytest.raises(ConfigError):
        SweepConfig(s=7.0, s_prime=4.0).validate()  # 4 >= 5*7/9
    with pytest.raises(ConfigError):
        SweepConfig(s=0.5).validate()
    SweepConfig().validate()


# sweep -----------------------------------------------------------------------------

def test_rows_have_expected_shape(default_sweep):
    cfg, rows, meta = default_sweep
    assert len(rows) == 6
    for r in rows:
        assert isinstance(r, CertificateRow)
        assert math.isfinite(r.lhs_log) and math.isfinite(r.rhs_log)
        assert r.window in ("fft", "ode")


def test_components_sum_to_rhs(default_sweep):
    cfg, rows, meta = default_sweep
    for r in rows:
        total = sum(r.components.values())
        assert total == pytest.approx(r.rhs_log, abs=1e-6)


def test_rows_reproducible(default_sweep):
    cfg, rows, meta = default_sweep
    rows2, _ = sweep(small_config())
    for a, b in zip(rows, rows2):
        assert a.lhs_log == b.lhs_log
        assert a.rhs_log == b.rhs_log
        assert a.slope == b.slope


def test_action_component_decreasing_in_sigma():
    vals = [action(s) for s in (2.0, 5.0, 10.0, 20.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_sqrt_delta_component_scales_with_sqrt_delta():
    rows1, meta1 = sweep(small_config(delta=0.01))
    rows2, meta2 = sweep(small_config(delta=0.005))
    r1 = {r.lam: r.components["sqrt_delta"] for r in rows1}
    r2 = {r.lam: r.components["sqrt_delta"] for r in rows2}
    for lam in r1:
        ratio = r2[lam] / r1[lam]
        assert ratio == pytest.approx(math.sqrt(0.5), rel=0.3)


# threshold report -------------------------------------------------------------------

def test_contradiction_for_s7(default_sweep):
    cfg, rows, meta = default_sweep
    rep = threshold_report(rows, meta, cfg)
    assert rep["verdict"] == "CONTRADICTION"
    assert rep["c_inf"] < 0
    assert rep["correction_exponent"] < 0
    assert rep["lam0"] is not None
    assert rep["preconditions"]["action_small"]
    assert rep["preconditions"]["sqrt_delta_small"]
    # fitted asymptotic slope near the analytic target
    assert rep["c_inf"] == pytest.approx(rep["target_c_inf"], abs=0.3)


def test_no_certificate_below_threshold():
    cfg = small_config(s=5.5)
    rows, meta = sweep(cfg)
    rep = threshold_report(rows, meta, cfg)
    assert rep["verdict"] == "NO-CERTIFICATE"
    assert rep["correction_exponent"] > 0


def test_inconclusive_on_bad_fit(default_sweep):
    cfg, rows, meta = default_sweep
    rng = np.random.default_rng(3)
    noisy = []
    for r in rows:
        shift = float(rng.uniform(-6, 6))
        noisy.append(
            CertificateRow(
                lam=r.lam,
                window=r.window,
                lhs_log=r.lhs_log,
                rhs_log=r.rhs_log + shift,
                slope=(r.rhs_log + shift - r.lhs_log) / r.lam,
                components=r.components,
            )
        )
    rep = threshold_report(noisy, meta, cfg)
    assert rep["verdict"] == "INCONCLUSIVE"


def test_report_needs_enough_rows(default_sweep):
    cfg, rows, meta = default_sweep
    with pytest.raises(ValueError):
        threshold_report(rows[:3], meta, cfg)
