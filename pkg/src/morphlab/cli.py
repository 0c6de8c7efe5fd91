"""Command line: ``morphlab {steady,evolve,reduce,mollify-check,verify}``.

Exit codes: 0 all assertions pass, 1 an assertion failed, 2 bad
configuration, 3 runtime abort (blow-up, I/O).
"""
import argparse
import sys
from pathlib import Path

import numpy as np

from . import verification as V
from .evolution import (
    BlowUpError,
    default_initial,
    evolve_1d_limit,
    evolve_2d,
    evolve_regular,
    mollified_source,
)
from .io import (
    ConfigError,
    default_config,
    load_config,
    write_report,
    write_snapshot,
    write_table,
    write_trajectory_csv,
)
from .model import UState
from .singular import build_m_mu, build_m_zero, swallow_diagnostics
from .spectral import SpectralError

EXIT_OK, EXIT_ASSERT, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

SUITES = ("elementary", "gronwall", "trace", "iron", "solver", "invariants", "mollifier", "reduction")


def _meta(cfg, **extra):
    m = {"config_hash": cfg.hash()}
    m.update(extra)
    return m


def _outdir(cfg, args):
    out = args.out if getattr(args, "out", None) else cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(line):
    print(line, flush=True)


def cmd_steady(cfg, args):
    P, out = cfg.params(), _outdir(cfg, args)
    n1, n2, h, eps = cfg["n1"], cfg["n2"], cfg["h"], cfg["epsilon"]
    m_mu = build_m_mu(P, h, eps, n1, n2)
    m0 = build_m_zero(P, n1)
    write_snapshot(out / "m_mu.txt", m_mu.coeffs, _meta(cfg, component="m_mu", h=h, epsilon=eps))
    write_snapshot(out / "m_zero.txt", m0.coeffs, _meta(cfg, component="m_zero"))
    rows = swallow_diagnostics(P, args.h_list, args.eps_list, args.s, 4 * n1, 4 * n2)
    cols = ("h", "epsilon", "layer_eps_gap", "source_gap", "layer_dim_gap", "dim_rate")
    write_table(out / "swallow.csv", V.RateTable("h", cols, [tuple(getattr(r, c) for c in cols) for r in rows]),
                _meta(cfg, s=args.s))
    _say(f"wrote m_mu, m_zero and {len(rows)} swallow rows to {out}")
    return EXIT_OK


def cmd_evolve(cfg, args):
    P, C, out = cfg.params(), cfg.solver(), _outdir(cfg, args)
    h, eps = cfg["h"], cfg["epsilon"]
    u0 = default_initial(C, two_d=args.system != "1d")
    if args.zero_ode_init:
        z = np.zeros(C.m1)
        u0 = UState(u0.u1, u0.u2, z, z, z)
    if args.system == "1d":
        traj = evolve_1d_limit(u0, P, C)
    elif args.system == "regular":
        traj = evolve_regular(u0, P, h, mollified_source(P, eps, C.n1), C)
    else:
        traj = evolve_2d(u0, P, h, eps, C)
    meta = _meta(cfg, system=args.system)
    write_trajectory_csv(out / "trajectory.csv", traj.rows(), meta)
    u = traj.final_u()
    t = traj.times[-1]
    for name in ("u1", "u2"):
        write_snapshot(out / f"final_{name}.txt", getattr(u, name).coeffs,
                       dict(meta, component=name, time=t, h=h))
    for name in ("u3", "u4", "u5"):
        write_snapshot(out / f"final_{name}.txt", getattr(u, name),
                       dict(meta, component=name, time=t, h=h, layout="nodal"))
    _say(f"{args.system}: {len(traj.times)} records to t={t:.6g} in {out}")
    return EXIT_OK


def cmd_reduce(cfg, args):
    P, C, out = cfg.params(), cfg.solver(), _outdir(cfg, args)
    ok = True
    red = V.dimension_reduction_study(P, tuple(args.h_list), C.T, C, workers=args.workers)
    write_table(out / "reduce_h.csv", red, _meta(cfg))
    _say(red.summary())
    ok &= red.passed
    eps = V.epsilon_limit_study(P, cfg["h"], tuple(args.eps_list), C.T, C, workers=args.workers)
    write_table(out / "reduce_eps.csv", eps, _meta(cfg))
    _say(eps.summary())
    ok &= eps.passed
    return EXIT_OK if ok else EXIT_ASSERT


def cmd_mollify(cfg, args):
    out = _outdir(cfg, args)
    tab = V.mollifier_convergence_study(args.s, tuple(args.eps_list), args.N)
    write_table(out / "mollify.csv", tab, _meta(cfg))
    trunc = float(np.max(tab.values("rel_change")))
    ok = tab.passed and trunc < args.trunc_tol
    _say(tab.summary())
    _say(f"[{'PASS' if trunc < args.trunc_tol else 'FAIL'}] truncation sensitivity "
         f"max={trunc:.4g} tol={args.trunc_tol:g}")
    return EXIT_OK if ok else EXIT_ASSERT


def _run_suite(name, cfg, seed):
    P = cfg.params()
    if name == "elementary":
        return V.check_elementary_inequalities()
    if name == "gronwall":
        return V.check_gronwall()
    if name == "trace":
        return V.check_trace_inequality(seed=seed)
    if name == "iron":
        return V.check_iron_estimates(seed=seed)
    if name == "invariants":
        return V.check_invariants(P, V.SweepSpec(eps_list=(0.4, 0.2, 0.1, 0.05, 0.0), seed=seed),
                                  n_random=20)
    if name == "reduction":
        return V.layer_free_reduction_check(seed=seed)
    if name == "mollifier":
        return V.mollifier_convergence_study(0.125, (0.4, 0.2, 0.1, 0.05, 0.0), refine=False)
    if name == "solver":
        t1 = V.self_convergence_study("etd1", P)
        t2 = V.self_convergence_study("etdrk2", P)
        rows = [{"scheme": t.notes["scheme"], "dt": r[0], "difference": r[1], "order": r[2]}
                for t in (t1, t2) for r in t.rows]
        ok = t1.notes["min_order"] >= 0.9 and t2.notes["min_order"] >= 1.8
        return V.CheckReport("solver", ok, rows, seed, {"order_etd1": 0.9, "order_etdrk2": 1.8})
    raise ValueError(name)


def cmd_verify(cfg, args):
    out = _outdir(cfg, args)
    names = SUITES if args.suite == "all" else (args.suite,)
    ok = True
    for name in names:
        rep = _run_suite(name, cfg, args.seed)
        if isinstance(rep, V.RateTable):
            write_table(out / f"verify_{name}.csv", rep, _meta(cfg, seed=args.seed))
        else:
            write_report(out / f"verify_{name}.csv", rep, _meta(cfg))
        _say(rep.summary())
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_ASSERT


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser():
    ap = argparse.ArgumentParser(prog="morphlab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="key=value run configuration file")
    ap.add_argument("--out", help="output directory (overrides config and MORPHLAB_OUT)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("steady", help="auxiliary layers and swallow diagnostics")
    p.add_argument("--h-list", type=_floats, default=[1.0, 0.5, 0.25, 0.125])
    p.add_argument("--eps-list", type=_floats, default=[0.4, 0.2, 0.1, 0.05, 0.0])
    p.add_argument("--s", type=float, default=0.125)
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("evolve", help="run one solver and write its trajectory")
    p.add_argument("--system", choices=("2d", "regular", "1d"), default="2d")
    p.add_argument("--zero-ode-init", action="store_true",
                   help="start u3, u4, u5 from zero instead of the default profile")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("reduce", help="h -> 0 and eps -> 0 convergence studies")
    p.add_argument("--h-list", type=_floats, default=[1.0, 0.5, 0.25, 0.125])
    p.add_argument("--eps-list", type=_floats, default=[0.4, 0.2, 0.1, 0.05])
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("mollify-check", help="mollifier-to-delta convergence table")
    p.add_argument("--s", type=float, default=0.125)
    p.add_argument("--eps-list", type=_floats, default=[0.4, 0.2, 0.1, 0.05, 0.0])
    p.add_argument("--N", type=int, default=4096)
    p.add_argument("--trunc-tol", type=float, default=0.01)
    p.set_defaults(func=cmd_mollify)

    p = sub.add_parser("verify", help="property suites")
    p.add_argument("--suite", choices=("all",) + SUITES, default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.out:
            args.out = Path(args.out)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BlowUpError, OSError, V.StudyError) as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (SpectralError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
