"""Command-line surface.

Subcommands: simulate, pcp, track (--mode stoc|omw|omw-cp), bench,
experiment. The default output directory is taken from the
STREAMRPCA_OUT_DIR environment variable when --out-dir is omitted.

Exit codes: 0 success, 1 contract violation, 2 I/O or parse error.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .changepoint import CpConfig, OmwCpPipeline
from .exceptions import (ContractViolation, InitializationError, ParseError,
                         SnapshotError)
from .pcp import PcpConfig, burnin_initialize, pcp_alm
from .simgen import (ChangePoints, Drift, SimSpec, Stable,
                     full_stream_matrix, generate)
from .state import (load_state, restore_cp_pipeline, save_state,
                    snapshot_cp_pipeline, snapshot_tracker)
from .streams import ingest_stream, write_raw_f64
from .trackers import (TrackerConfig, continue_tracker, init_tracker,
                       omw_init, state_element_count, time_steps)

OUT_DIR_ENV = "STREAMRPCA_OUT_DIR"


def _out_dir(args):
    out = args.out_dir or os.environ.get(OUT_DIR_ENV)
    if not out:
        raise ContractViolation(
            f"no output directory: pass --out-dir or set {OUT_DIR_ENV}")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _add_cp_flags(p):
    p.add_argument("--n-cp-burnin", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--n-check", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--alpha-prop", type=float, default=0.5)
    p.add_argument("--n-positive", type=int, default=3)
    p.add_argument("--n-tol", type=int, default=0)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="streamrpca",
        description="Streaming robust PCA with change-point detection")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic stream")
    p.add_argument("--variant", choices=["stable", "drift", "changepoints"],
                   default="stable")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--t", type=int, default=1000)
    p.add_argument("--n-burnin", type=int, default=100)
    p.add_argument("--rho", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--r0", type=int, default=3)
    p.add_argument("--t-p", type=int, default=125)
    p.add_argument("--ranks", type=str, default="5,25,12",
                   help="comma-separated per-piece ranks (changepoints)")
    p.add_argument("--cps", type=str, default="500,1000",
                   help="comma-separated change points (changepoints)")
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("pcp", help="batch low-rank + sparse decomposition")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "raw-f64"], default="csv")
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("track", help="online tracking over a stream file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["csv", "raw-f64"], default="csv")
    p.add_argument("--mode", choices=["stoc", "omw", "omw-cp"], default="omw")
    p.add_argument("--n-burnin", type=int, default=100)
    p.add_argument("--n-win", type=int, default=100)
    p.add_argument("--lambda1", type=float, default=None)
    p.add_argument("--lambda2", type=float, default=None)
    _add_cp_flags(p)
    p.add_argument("--save-state", default=None,
                   help="write a resumable snapshot after the run")
    p.add_argument("--resume", default=None,
                   help="resume from a snapshot written by --save-state")
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("bench", help="per-step timing of the window tracker")
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--r", type=int, default=5)
    p.add_argument("--t", type=int, default=1000)
    p.add_argument("--n-burnin", type=int, default=100)
    p.add_argument("--n-win", type=int, default=100)
    p.add_argument("--rho", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("experiment", help="run a full study")
    p.add_argument("--study", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--scale", choices=["desk", "paper"], default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="stoc,omw,omw-cp")
    p.add_argument("--out-dir", default=None)

    return parser


def _cmd_simulate(args):
    if args.variant == "stable":
        variant = Stable(r=args.r)
    elif args.variant == "drift":
        variant = Drift(r=args.r, r0=args.r0, t_p=args.t_p)
    else:
        ranks = tuple(int(x) for x in args.ranks.split(","))
        cps = tuple(int(x) for x in args.cps.split(","))
        variant = ChangePoints(ranks=ranks, cps=cps, r0=args.r0, t_p=args.t_p)
    spec = SimSpec(m=args.m, t=args.t, n_burnin=args.n_burnin, rho=args.rho,
                   seed=args.seed, variant=variant)
    gt = generate(spec)
    out = _out_dir(args)
    write_raw_f64(out / "M.f64", gt.M)
    write_raw_f64(out / "L_true.f64", gt.L)
    write_raw_f64(out / "S_true.f64", gt.S)
    write_raw_f64(out / "Mb.f64", gt.M_b)
    (out / "truth.json").write_text(
        json.dumps({"cps": gt.cps, "m": spec.m, "T": spec.t,
                    "n_burnin": spec.n_burnin, "rho": spec.rho,
                    "seed": spec.seed, "variant": args.variant},
                   sort_keys=True) + "\n", encoding="ascii")
    print(f"wrote stream of {spec.t} samples (dim {spec.m}) to {out}")
    return 0


def _cmd_pcp(args):
    stream = ingest_stream(args.input, args.format)
    cols = []
    i = 0
    while (x := stream.get(i)) is not None:
        cols.append(x)
        i += 1
    if not cols:
        raise ContractViolation("pcp: empty input stream")
    M = np.column_stack(cols)
    config = PcpConfig(lam=args.lam, mu=args.mu if args.mu else "auto",
                       tol=args.tol, max_iter=args.max_iter)
    result = pcp_alm(M, config)
    out = _out_dir(args)
    write_raw_f64(out / "L.f64", result.L)
    write_raw_f64(out / "S.f64", result.S)
    (out / "result.json").write_text(
        json.dumps({"iterations": result.iterations,
                    "converged": result.converged}, sort_keys=True) + "\n",
        encoding="ascii")
    print(f"pcp: {result.iterations} iterations, converged={result.converged}")
    return 0


def _cp_config(args):
    return CpConfig(
        n_burnin=args.n_burnin, n_win=args.n_win,
        n_cp_burnin=args.n_cp_burnin, n_test=args.n_test,
        n_check=args.n_check, alpha=args.alpha,
        alpha_prop=args.alpha_prop, n_positive=args.n_positive,
        n_tol=args.n_tol, lambda1=args.lambda1, lambda2=args.lambda2)


def _cmd_track(args):
    retain = args.n_burnin + args.n_check + 8
    stream = ingest_stream(args.input, args.format, retain=retain)
    report = None
    pipeline = None
    tracker_state = None
    if args.mode == "omw-cp":
        if args.resume:
            pipeline = restore_cp_pipeline(load_state(args.resume),
                                           _cp_config(args))
        else:
            pipeline = OmwCpPipeline(_cp_config(args))
        result, report = pipeline.run(stream)
    else:
        if args.resume:
            snapshot = load_state(args.resume)
            if snapshot.kind != args.mode:
                raise ContractViolation(
                    f"snapshot was taken in mode {snapshot.kind!r}, "
                    f"not {args.mode!r}")
            model, buffer, start = snapshot.model, snapshot.buffer, \
                snapshot.cursor
        else:
            config = TrackerConfig(n_burnin=args.n_burnin, n_win=args.n_win,
                                   lambda1=args.lambda1, lambda2=args.lambda2)
            model, buffer, start = init_tracker(stream, args.mode, config)
        result, cursor = continue_tracker(stream, args.mode, model, buffer,
                                          start)
        tracker_state = (model, buffer, cursor)

    out = _out_dir(args)
    write_raw_f64(out / "L.f64", result.L)
    write_raw_f64(out / "S.f64", result.S)
    (out / "changepoints.json").write_text(
        json.dumps({"change_points": result.change_points}, sort_keys=True)
        + "\n", encoding="ascii")
    if report is not None:
        experiments._write_diagnostics(out / "diagnostics.jsonl",
                                       report.diagnostics)
    if args.save_state:
        if pipeline is not None:
            save_state(args.save_state, snapshot_cp_pipeline(pipeline))
        else:
            model, buffer, cursor = tracker_state
            save_state(args.save_state,
                       snapshot_tracker(args.mode, model, buffer, cursor))
    print(f"tracked {result.L.shape[1]} samples; "
          f"change points: {result.change_points}")
    return 0


def _cmd_bench(args):
    spec = SimSpec(m=args.m, t=args.t, n_burnin=args.n_burnin, rho=args.rho,
                   seed=args.seed, variant=Stable(r=args.r))
    gt = generate(spec)
    M = full_stream_matrix(gt)
    lambda1 = 1.0 / np.sqrt(max(args.m, args.n_win))
    lambda2 = 100.0 * lambda1
    init = burnin_initialize(M[:, :args.n_burnin], lambda1, lambda2,
                             args.n_win)
    model, buffer = omw_init(init, lambda1, lambda2, args.n_win)
    samples = [M[:, args.n_burnin + k] for k in range(args.t)]
    times = time_steps(model, buffer, samples)
    times = np.array(times)
    summary = {
        "steps": len(times),
        "mean_ms": float(times.mean() * 1e3),
        "p50_ms": float(np.percentile(times, 50) * 1e3),
        "p95_ms": float(np.percentile(times, 95) * 1e3),
        "first_100_mean_ms": float(times[:100].mean() * 1e3),
        "last_100_mean_ms": float(times[-100:].mean() * 1e3),
        "state_elements": state_element_count(model, buffer),
    }
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_experiment(args):
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    out = _out_dir(args)
    reports = experiments.run_experiment(args.study, args.scale, args.seed,
                                         out, methods=methods)
    for method, report in reports.items():
        print(f"{method}: err_L={report.err_L:.6g} err_S={report.err_S:.6g} "
              f"f_S={report.f_S:.6g}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "pcp": _cmd_pcp,
    "track": _cmd_track,
    "bench": _cmd_bench,
    "experiment": _cmd_experiment,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, SnapshotError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ContractViolation, InitializationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
