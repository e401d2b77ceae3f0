"""Tests for the direct ODE oracle: integration, recessive selection, probes."""

import math

import numpy as np
import pytest

from wkblab.branchcut import BranchTracker
from wkblab.errors import NumericError, StencilError
from wkblab.lg import lg_evaluate
from wkblab.oracle import derivative_probe, integrate, subdominant_solution
from wkblab.potential import ModelParams, action, eval_q, real_root

LAMBDAS = [8.0, 16.0, 32.0, 64.0]


def make_params(lam, sigma=5.0, gamma=1.0, delta=0.01):
    return ModelParams(sigma, gamma, delta, lam)


@pytest.fixture(scope="module")
def traces():
    """Subdominant traces over a moderate window, one per lam."""
    out = {}
    for lam in LAMBDAS:
        p = make_params(lam)
        x_star = real_root(p.sigma).x_star
        grid = list(np.linspace(-1.0, 5.0, 61)) + [x_star]
        out[lam] = (p, subdominant_solution(p, grid=grid))
    return out


# integrate -----------------------------------------------------------------------

def test_zero_initial_data_stays_zero():
    p = make_params(10.0)
    tr = integrate(p, 2.0, 0.0, (0.0, 0.0, 0.0))
    assert np.all(tr.w_unit == 0.0)


def test_constant_coefficient_exponential():
    # q = 1: W = exp(-lam X) integrated right-to-left from X=3
    p = make_params(10.0)
    lam = p.lam
    init = (1.0, -lam, 0.0)
    tr = integrate(p, 0.0, 3.0, init, q_fn=lambda x: 1.0 + 0.0j)
    xs = np.linspace(0.0, 3.0, 31)
    w, wp = tr.eval_many(xs)
    want = np.exp(-lam * xs)
    assert np.max(np.abs(w - want) / want) < 1e-8
    assert np.max(np.abs(wp + lam * want) / (lam * want)) < 1e-8


def test_trace_ode_residual_invariant(traces):
    for lam, (p, tr) in traces.items():
        for x in (-0.8, -0.2, 0.5, 2.0, 4.0):
            assert tr.ode_residual(x) < 1e-6


def test_landings_are_exact_samples():
    p = make_params(8.0)
    tr = subdominant_solution(p, grid=[-0.5, 0.25, 1.75])
    for g in (-0.5, 0.25, 1.75, 0.0):
        assert np.min(np.abs(tr.x - g)) == 0.0


def test_sample_spacing_resolves_wavelength(traces):
    for lam, (p, tr) in traces.items():
        dx = np.diff(tr.x)
        cap = 0.1 * 2 * math.pi / (lam * (1 + np.abs(tr.x[:-1])) ** 1.5)
        assert np.all(dx <= cap * 1.0001)


# subdominant_solution --------------------------------------------------------------

def test_normalization_at_zero(traces):
    vals = []
    for lam, (p, tr) in traces.items():
        w0, _ = tr.value_at(0.0)
        assert abs(w0) >= 0.75
        vals.append(lam * abs(w0 - 1.0))
    assert max(vals) < 5.0


def test_derivative_at_zero(traces):
    # W'(0) = -lam q(0)^(1/2) W(0) + O(1)
    vals = []
    for lam, (p, tr) in traces.items():
        w0, wp0 = tr.value_at(0.0)
        sq = BranchTracker(p).move_to(0.0)
        vals.append(abs(wp0 + lam * sq * w0))
    assert max(vals) < 5.0


def test_plateau_near_zero(traces):
    c0 = 0.4
    for lam, (p, tr) in traces.items():
        xs = np.linspace(-c0 / lam, c0 / lam, 21)
        w, _ = tr.eval_many(xs)
        assert np.min(np.abs(w)) >= 0.5


def test_lg_accuracy_right_of_turning_point(traces):
    # lam * (relative error of the minus LG mode vs oracle) bounded on [0.5, 5];
    # compared in log scale since both values underflow doubles at large lam*X
    worst = []
    for lam, (p, tr) in traces.items():
        tracker = BranchTracker(p)
        xs = np.linspace(0.5, 5.0, 40)
        w, _, lf = tr.eval_scaled_many(xs)
        rel = []
        for x, wu, lfx in zip(xs, w, lf):
            mode = lg_evaluate(p, float(x), -1, 0.0, tracker)
            ratio = np.exp(
                mode.log_mod - (np.log(abs(wu)) + lfx) + 1j * (mode.arg - np.angle(wu))
            )
            rel.append(abs(ratio - 1.0))
        worst.append(lam * max(rel))
    assert max(worst) < 10.0


def test_forbidden_region_growth(traces):
    # (log |W(x_star)| - lam * A) / log lam bounded
    a_sigma = action(5.0)
    x_star = real_root(5.0).x_star
    vals = []
    for lam, (p, tr) in traces.items():
        vals.append((tr.log_abs_w([x_star])[0] - lam * a_sigma) / np.log(lam))
    assert max(np.abs(vals)) < 5.0


def test_wronskian_conservation():
    p = make_params(32.0)
    x_left = -p.delta * p.lam**2
    grid = np.linspace(x_left, 5.0, 121)
    tr1 = subdominant_solution(p, grid=grid, rel_tol=1e-11)
    # independent second solution: grows rightward, integrated left to right
    tracker = BranchTracker(p)
    sq = tracker.move_to(complex(x_left))
    init = (1.0, p.lam * sq, 0.0)
    tr2 = integrate(p, x_left, 6.0, init, rel_tol=1e-11)
    w1, wp1, lf1 = tr1.eval_scaled_many(grid)
    w2, wp2, lf2 = tr2.eval_scaled_many(grid)
    wr = (w1 * wp2 - wp1 * w2) * np.exp(lf1 + lf2 - lf1[0] - lf2[0])
    drift = np.abs(wr - wr[0]) / np.abs(wr[0])
    assert drift.max() < 1e-8


def test_recessive_dichotomy():
    # the independent solution exceeds the subdominant one by e^lam at the
    # right end
    p = make_params(8.0)
    tr1 = subdominant_solution(p, grid=[0.0])
    tracker = BranchTracker(p)
    init = (1.0, p.lam * tracker.move_to(0.0 + 0j), 0.0)
    tr2 = integrate(p, 0.0, tr1.x[-1], init)
    xr = tr1.x[-1]
    gap = tr2.log_abs_w([xr])[0] - tr1.log_abs_w([xr])[0]
    assert gap > p.lam


def test_rescaling_consistency(traces):
    p, tr = traces[16.0]
    lam2 = p.lam**2
    xs_small = np.linspace(-0.002, 0.003, 23)
    w_direct, _ = tr.eval_many(lam2 * xs_small)
    w_two_step = np.array([tr.value_at(lam2 * x)[0] for x in xs_small])
    assert np.max(np.abs(w_direct - w_two_step)) <= 1e-8 * np.max(np.abs(w_direct))


def test_left_region_envelope(traces):
    # log |W(-delta lam^2)| <= lam A + C gamma sqrt(delta) lam + m log lam + c
    a_sigma = action(5.0)
    for lam, (p, tr) in traces.items():
        x_left = -p.delta * lam**2
        if x_left < tr.x[0]:
            continue
        val = tr.log_abs_w([x_left])[0]
        bound = lam * a_sigma + 3.0 * np.sqrt(p.delta) * lam + 2.0 * np.log(lam) + 3.0
        assert val <= bound


def test_envelope_dominates_oracle_outside_airy_disk():
    # with constants fitted on the right half-line (plus the left-edge
    # constant fitted at -delta lam^2), the regional envelope dominates
    # log|W| pointwise in the LG regions; the turning region between the
    # cubic root and the lam-shifted symbol zero, fattened by the root
    # scale, is excluded (the connection zone is bounded separately)
    from wkblab.lg import envelope_log, fit_growth_envelope
    from wkblab.potential import symbol_zero

    delta = 0.01
    lams = [8.0, 16.0, 32.0]
    runs = {}
    for lam in lams:
        p = ModelParams(5.0, 1.0, delta, lam)
        x_left = -delta * lam**2
        runs[lam] = (p, subdominant_solution(p, grid=[x_left, 0.0]))
    rights = [
        float(np.max(tr.log_abs_w(np.linspace(0.0, 2.0, 31))))
        for _, tr in runs.values()
    ]
    lefts = [
        float(tr.log_abs_w([-delta * lam**2])[0])
        for lam, (_, tr) in runs.items()
    ]
    env = fit_growth_envelope(5.0, 1.0, delta, lams, rights, lefts)
    assert env.c_sigma > 0
    x_star = real_root(5.0).x_star
    margin = abs(x_star)
    worst_ratio = 0.0
    for lam, (p, tr) in runs.items():
        zero = symbol_zero(p)
        lo = min(x_star, zero.real) - margin
        hi = max(x_star, zero.real) + margin
        xs = np.linspace(tr.x[0], 2.0, 60)
        xs = xs[(xs < lo) | (xs > hi)]
        logs = tr.log_abs_w(xs)
        for x, lw in zip(xs, logs):
            bound = envelope_log(p, env, float(x))
            if x >= lo:
                # right of the turning zone the fitted envelope must
                # dominate pointwise
                assert lw <= bound + 1e-9
            else:
                # left region: the shape works with one bounded constant;
                # record the sup-fitted constant and require it O(1)
                # (near-zone O(1/lam) corrections make strict pointwise
                # domination with the far-edge constant too brittle at
                # lam <= 16)
                base = bound - env.c_sigma * env.gamma * math.sqrt(abs(x))
                ratio = (lw - base) / (env.gamma * math.sqrt(abs(x)))
                worst_ratio = max(worst_ratio, ratio)
    assert worst_ratio < 3.0  # calibrated: measured ~0.75
    assert abs(env.c_sigma) < 3.0


# derivative_probe -------------------------------------------------------------------

def test_probe_k0_is_log_abs(traces):
    p, tr = traces[16.0]
    assert derivative_probe(tr, 1.0, 0) == pytest.approx(tr.log_abs_w([1.0])[0])


def test_probe_first_derivative_at_zero(traces):
    for lam, (p, tr) in traces.items():
        got = derivative_probe(tr, 0.0, 1)
        assert got == pytest.approx(np.log(lam), abs=0.4)


def test_probe_matches_analytic_exponential():
    p = make_params(10.0)
    lam = p.lam
    tr = integrate(p, 0.0, 3.0, (1.0, -lam, 0.0), q_fn=lambda x: 1.0 + 0.0j)
    for k in (1, 2, 3, 4):
        got = derivative_probe(tr, 1.5, k)
        want = k * np.log(lam) - lam * 1.5
        assert got == pytest.approx(want, abs=1e-5)


def test_probe_derivative_cost_rule(traces):
    # log |W'| - log |W| <= log(C lam |q|^(1/2)) away from the turning point
    for lam, (p, tr) in traces.items():
        for x in (-0.9, 0.8, 3.0):
            cost = derivative_probe(tr, x, 1) - derivative_probe(tr, x, 0)
            cap = np.log(10.0 * lam * abs(eval_q(p, x)) ** 0.5)
            assert cost <= cap


def test_probe_factorial_growth(traces):
    # log |d^k W| - log|W| <= k log(C lam (1+|x|)^(3/2)) + log k! + (k+1) log C
    p, tr = traces[32.0]
    lam = p.lam
    for x in (0.7, 2.5):
        base = derivative_probe(tr, x, 0)
        for k in (1, 2, 3, 4):
            got = derivative_probe(tr, x, k) - base
            cap = (
                k * np.log(3.0 * lam * (1 + abs(x)) ** 1.5)
                + math.lgamma(k + 1)
                + (k + 1) * np.log(3.0)
            )
            assert got <= cap


def test_probe_stencil_guard(traces):
    p, tr = traces[8.0]
    with pytest.raises(StencilError):
        derivative_probe(tr, tr.x[-1], 2)


def test_eval_outside_coverage_raises(traces):
    p, tr = traces[8.0]
    with pytest.raises(NumericError):
        tr.eval_many([tr.x[-1] + 1.0])


def test_csv_export_round_trip(tmp_path, traces):
    p, tr = traces[8.0]
    path = tmp_path / "trace.csv"
    tr.export_csv(path, header_lines=["config: test"])
    data = np.genfromtxt(path, delimiter=",", skip_header=2)
    assert data.shape[1] == 6
    assert data.shape[0] == len(tr.x)
    assert np.allclose(data[:, 0], tr.x)
