"""Command-line front door: configuration, orchestration, data export.

Commands: geometry | turning | solve | connect | norms | certificate |
figure. Every output file embeds the resolved configuration; the timestamp is
isolated to its own header line so reruns differ only there. Exit codes:
0 success, 2 configuration error, 3 numeric-module error, 4 inconclusive
certificate.
"""

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import ConfigError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_INCONCLUSIVE = 4


def _timestamp():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _csv_header(cfg):
    return [f"generated: {_timestamp()}", f"config: {cfg.echo_json()}"]


def _write_csv(path, header_lines, columns, rows):
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _write_json(path, cfg, payload):
    doc = {
        "meta": {"timestamp": _timestamp(), "version": __version__},
        "config": cfg.as_dict(),
    }
    doc.update(payload)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg):
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _params(cfg, lam, delta=None):
    from .potential import ModelParams

    return ModelParams(
        cfg.sigma, cfg.gamma, cfg.delta if delta is None else delta, lam,
        lambda_min=cfg.lambda_min,
    )


def _pmap(fn, items, workers):
    """Worker-pool map over pure per-lam units (sequential when workers=1)."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cmd_geometry(cfg):
    from .potential import cubic_geometry

    geo = cubic_geometry(cfg.sigma)
    out = _outdir(cfg)
    _write_json(
        out / "geometry.json",
        cfg,
        {
            "sigma": cfg.sigma,
            "x_star": geo.x_star,
            "v_prime_at_root": geo.v_prime_at_root,
            "a_sigma": geo.a_sigma,
        },
    )
    print(f"x_star = {geo.x_star:.10g}, a_sigma = {geo.a_sigma:.10g}")
    return EXIT_OK


def cmd_turning(cfg):
    from .potential import real_root, symbol_zero, eval_q

    geo = real_root(cfg.sigma)
    lead = 2.0 * cfg.gamma * abs(geo.x_star) / geo.v_prime_at_root
    rows = []
    for lam in cfg.turning_lambdas:
        p = _params(cfg, lam)
        z = symbol_zero(p)
        rows.append(
            (lam, z.real, z.imag, abs(eval_q(p, z)), -lead / lam)
        )
    out = _outdir(cfg)
    _write_csv(
        out / "turning.csv",
        _csv_header(cfg),
        ["lam", "re_x_lam", "im_x_lam", "residual", "predicted_im"],
        rows,
    )
    print(f"wrote {out / 'turning.csv'} ({len(rows)} rows)")
    return EXIT_OK


def _solve_one(cfg, lam):
    from .oracle import subdominant_solution

    p = _params(cfg, lam)
    x_edge = 0.95 * cfg.delta * lam**2
    grid = np.linspace(-x_edge, min(x_edge, 2.0), 33)
    return p, subdominant_solution(p, x_right=cfg.x_right, grid=grid)


def cmd_solve(cfg):
    import functools

    from .lg import fit_growth_envelope
    from .potential import action, real_root

    out = _outdir(cfg)
    a_sigma = action(cfg.sigma)
    x_star = real_root(cfg.sigma).x_star
    lambdas, right_logs, left_logs, reports = [], [], [], []
    solved = _pmap(
        functools.partial(_solve_one, cfg), cfg.ode_lambdas, cfg.parallelism
    )
    for lam, (p, trace) in zip(cfg.ode_lambdas, solved):
        trace.export_csv(out / f"trace_lam{lam:g}.csv", _csv_header(cfg))
        xs_right = np.linspace(0.0, min(2.0, trace.x[-1] - 0.1), 41)
        right = float(np.max(trace.log_abs_w(xs_right)))
        left = float(trace.log_abs_w([trace.x[0]])[0])
        w0, wp0 = trace.value_at(0.0)
        lambdas.append(lam)
        right_logs.append(right)
        left_logs.append(left)
        reports.append(
            {
                "lam": lam,
                "w0": [w0.real, w0.imag],
                "wp0": [wp0.real, wp0.imag],
                "log_w_at_root": float(trace.log_abs_w([x_star])[0]),
                "log_w_left_edge": left,
                "right_max_log": right,
            }
        )
    env = fit_growth_envelope(
        cfg.sigma, cfg.gamma, cfg.delta, lambdas, right_logs, left_logs,
        a_sigma=a_sigma,
    )
    _write_json(
        out / "solve.json",
        cfg,
        {
            "a_sigma": a_sigma,
            "envelope": {
                "c_sigma": env.c_sigma,
                "m_fit": env.m_fit,
                "log_c": env.log_c,
            },
            "rows": reports,
        },
    )
    print(f"wrote {out / 'solve.json'} and {len(lambdas)} trace files")
    return EXIT_OK


def cmd_connect(cfg):
    import functools

    from .airy import AiryChart, fit_uniform_representation

    out = _outdir(cfg)
    rows = []
    solved = _pmap(
        functools.partial(_solve_one, cfg), cfg.ode_lambdas, cfg.parallelism
    )
    for lam, (p, trace) in zip(cfg.ode_lambdas, solved):
        chart = AiryChart.build(p)
        fit = fit_uniform_representation(p, chart, trace)
        good = fit.ok
        rows.append(
            {
                "lam": lam,
                "chart_radius": chart.radius,
                "n_fitted": int(np.count_nonzero(good)),
                "max_heldout_residual": fit.max_residual,
                "median_abs_b0": float(np.median(np.abs(fit.b0[good]))),
                "median_abs_b1": float(np.median(np.abs(fit.b1[good]))),
            }
        )
    _write_json(out / "connect.json", cfg, {"rows": rows})
    print(f"wrote {out / 'connect.json'}")
    return EXIT_OK


def cmd_norms(cfg):
    from .gevrey import build_norm_spec, data_norm, decay_profile, \
        export_spectrum_csv
    from .nullsolution import CutoffFamily, SeparatedField
    from .oracle import subdominant_solution

    out = _outdir(cfg)
    delta = cfg.norms_delta
    # the norms pipeline never touches the time profile; cap c0 so the
    # eps_t = c0 sqrt(delta) coupling stays legal at the wide norms window
    c0 = min(cfg.c0, 0.4 * cfg.t_star / math.sqrt(delta))
    cutoffs = CutoffFamily.build(delta, cfg.s_prime, cfg.t_star, c0)
    profiles, norms_rows = [], []
    for lam in cfg.fft_lambdas:
        p = _params(cfg, lam, delta=delta)
        x_edge = 0.95 * delta * lam**2
        grid = np.linspace(-x_edge, min(x_edge, 2.0), 33)
        x_right = max(cfg.x_right, x_edge + 0.5)
        field = SeparatedField(
            p, subdominant_solution(p, x_right=x_right, grid=grid)
        )
        spec = build_norm_spec(lam, delta, rho=cfg.rho, n_order=cfg.n_order,
                               s=cfg.s)
        gx = spec.grids["x"]
        live = np.abs(gx.x) < cutoffs.k2["x"]
        fx = np.zeros(gx.count, dtype=complex)
        w, _ = field.trace.eval_many(lam**2 * gx.x[live])
        fx[live] = cutoffs.chi_x.value(gx.x[live]) * w
        prof = decay_profile(fx, lam, cfg.s_prime, gx)
        export_spectrum_csv(
            out / f"spectrum_lam{lam:g}.csv", fx, gx, _csv_header(cfg)
        )
        norms = data_norm(field, cutoffs, spec)
        profiles.append(
            {
                "lam": lam,
                "plateau_edge": prof.plateau_edge,
                "stretch_exponent": prof.stretch_exponent,
                "decay_rate": prof.decay_rate,
                "fit_residual": prof.fit_residual,
            }
        )
        norms_rows.append(
            {"lam": lam, "log_g0": norms.log_g0, "log_g1": norms.log_g1,
             "factors": norms.factors}
        )
    lams = np.array([p["lam"] for p in profiles])
    edges = np.array([p["plateau_edge"] for p in profiles])
    slope = float(
        np.polynomial.polynomial.polyfit(np.log(lams), np.log(edges), 1)[1]
    )
    _write_json(
        out / "norms.json",
        cfg,
        {
            "norms_delta": delta,
            "plateau_slope": slope,
            "profiles": profiles,
            "data_norms": norms_rows,
        },
    )
    print(f"wrote {out / 'norms.json'} (plateau slope {slope:.3f})")
    return EXIT_OK


def cmd_certificate(cfg):
    from .certificate import SweepConfig, sweep, threshold_report

    out = _outdir(cfg)
    scfg = SweepConfig(
        sigma=cfg.sigma,
        gamma=cfg.gamma,
        delta=cfg.delta,
        s=cfg.s,
        s_prime=cfg.s_prime,
        t_star=cfg.t_star,
        rho=cfg.rho,
        n_order=cfg.n_order,
        c0=cfg.c0,
        fft_lambdas=tuple(cfg.fft_lambdas),
        ode_lambdas=tuple(cfg.cert_ode_lambdas),
        seed=cfg.seed,
    )
    rows, meta = sweep(scfg)
    report = threshold_report(rows, meta, scfg)
    _write_json(out / "certificate.json", cfg, {"report": report})
    _write_csv(
        out / "certificate_rows.csv",
        _csv_header(cfg),
        ["lam", "window", "lhs_log", "rhs_log", "slope"],
        [(r.lam, r.window, r.lhs_log, r.rhs_log, r.slope) for r in rows],
    )
    print(
        f"verdict: {report['verdict']} (c_inf = {report['c_inf']:.4f}, "
        f"target = {report['target_c_inf']:.4f})"
    )
    if report["verdict"] == "INCONCLUSIVE":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_figure(cfg):
    from .potential import cubic_geometry, eval_v

    geo = cubic_geometry(cfg.sigma)
    xs = np.linspace(geo.x_star, 0.04, 400)
    rows = [
        (float(x), math.sqrt(max(eval_v(cfg.sigma, float(x)), 0.0)),
         1.0 if geo.x_star <= x <= 0.0 else 0.0)
        for x in xs
    ]
    out = _outdir(cfg)
    _write_csv(
        out / "figure.csv",
        _csv_header(cfg) + [
            f"root_abscissa: {geo.x_star:.10g}",
            f"a_sigma: {geo.a_sigma:.10g}",
        ],
        ["X", "sqrt_v", "shaded"],
        rows,
    )
    print(f"wrote {out / 'figure.csv'}")
    return EXIT_OK


COMMANDS = {
    "geometry": cmd_geometry,
    "turning": cmd_turning,
    "solve": cmd_solve,
    "connect": cmd_connect,
    "norms": cmd_norms,
    "certificate": cmd_certificate,
    "figure": cmd_figure,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wkblab",
        description="Numerical laboratory for the cubic turning-point model",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="configuration file (key = value lines)")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration key (repeatable)",
    )
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(
            json.dumps(
                {
                    "error": "numeric",
                    "module": type(exc).__module__,
                    "kind": type(exc).__name__,
                    "detail": str(exc),
                }
            ),
            file=sys.stderr,
        )
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
