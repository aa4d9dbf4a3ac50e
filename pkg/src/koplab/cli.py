"""Command-line entry point: ``koplab <subcommand> ...``.

Exit codes: 0 all tolerances met, 2 tolerance failure, 3 solver failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import experiments, io
from .errors import KoplabError
from .littlewood_paley import norm_report_rows
from .linear import ENVELOPE_COLUMNS
from .model import make_initial_data
from .solver import K, OP, integrate

EXIT_OK, EXIT_TOLERANCE, EXIT_SOLVER = 0, 2, 3


def _list(text, cast=float):
    return [cast(v) for v in text.split(",") if v.strip()]


def _out_dir(args, cfg=None):
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(cfg.output_dir if cfg is not None else "koplab_out")


def cmd_kernel_validate(args):
    rows = experiments.run_kernel_validation(_list(args.dims, int))
    path = io.write_csv(_out_dir(args) / "kernel_validation.csv", "kernel_validation", 1,
                        experiments.KERNEL_COLUMNS, rows)
    for r in rows:
        print(f"d={r[0]} {r[1]:<34} {r[2]:.3e} tol={r[3]:.0e} {'ok' if r[4] else 'FAIL'}")
    print(f"wrote {path}")
    return EXIT_OK if all(r[4] for r in rows) else EXIT_TOLERANCE


def cmd_linear_validate(args):
    cfg = experiments.load_config(args.config)
    rep = experiments.run_linear_validation(cfg, alpha=args.alpha)
    out = _out_dir(args, cfg)
    io.write_csv(out / "linear_oracle.csv", "linear_oracle", 1, ("t", "max_error", "median_error"), rep.oracle_rows)
    io.write_csv(out / "linear_envelopes.csv", "linear_envelopes", 1, ENVELOPE_COLUMNS,
                 [e.as_tuple() for e in rep.envelope_rows])
    print(f"max semigroup-vs-expm error {rep.max_oracle_error:.3e}")
    print(f"max trace residual {rep.max_trace_residual:.3e}, max det residual {rep.max_det_residual:.3e}")
    print(f"envelope rows ok: {sum(e.ok for e in rep.envelope_rows)}/{len(rep.envelope_rows)}")
    return EXIT_OK if rep.ok else EXIT_TOLERANCE


def cmd_thresholds(args):
    cfg = experiments.load_config(args.config)
    rows, onset = experiments.run_threshold_report(cfg.params, _list(args.alphas))
    path = io.write_csv(_out_dir(args, cfg) / "thresholds.csv", "thresholds", 1, experiments.THRESHOLD_COLUMNS, rows)
    for r in rows:
        flag = "" if r[6] else "  <- outside bracket"
        print(f"alpha={r[0]:<8g} x={r[1]:.6g} y={r[2]:.6g} y/alpha^2={r[7]:.4f}{flag}")
    print(f"alpha0 onset (scan over powers of two): {onset}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(args):
    cfg = experiments.load_config(args.config)
    model = OP(args.alpha) if args.model == "op" else K()
    try:
        state0 = make_initial_data(cfg.grid, cfg.amplitude, cfg.band, cfg.seed)
        traj = integrate(state0, model, cfg.params, cfg.step)
    except KoplabError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = _out_dir(args, cfg)
    manifest = io.write_trajectory(out, traj, prefix=f"{args.model}")
    alpha = args.alpha if args.model == "op" else math.inf
    norms = norm_report_rows(traj, cfg.grid.d / 2.0, alpha, cfg.params)
    io.write_csv(out / f"{args.model}_norms.csv", "norm_report", 1, ("t", "norm_kind", "s", "alpha", "value"), norms)
    print(f"{model.label()}: {len(traj)} samples up to t={traj.times[-1]:g}; manifest {manifest}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = experiments.load_config(args.config)
    try:
        rep = experiments.run_convergence_sweep(cfg, workers=args.workers)
    except KoplabError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = _out_dir(args, cfg)
    io.write_csv(out / "sweep.csv", "convergence_sweep", 1, experiments.SWEEP_COLUMNS, rep.csv_rows())
    io.write_csv(out / "sweep_fits.csv", "convergence_fits", 1, ("quantity", "slope", "intercept", "ci95", "n"),
                 rep.fit_rows())
    if rep.model_extension:
        print("note: d = 1 sweep (model extension: the convergence analysis covers d >= 2)")
    for name, f in rep.fits.items():
        print(f"{name:<10} slope {f.slope:+.3f} +/- {f.ci95:.3f}")
    for name, ok in rep.checks.items():
        print(f"{name:<20} {'ok' if ok else 'FAIL'}")
    if not rep.checks.get("all_runs_ok", False):
        return EXIT_SOLVER
    return EXIT_OK if rep.ok else EXIT_TOLERANCE


def build_parser():
    parser = argparse.ArgumentParser(prog="koplab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel-validate", help="Bessel kernel and Fourier-pair checks")
    p.add_argument("--dims", default="1,2,3")
    p.add_argument("--out")
    p.set_defaults(func=cmd_kernel_validate)

    p = sub.add_parser("linear-validate", help="semigroup, eigenvalue and envelope checks")
    p.add_argument("--config", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_linear_validate)

    p = sub.add_parser("thresholds", help="x_alpha, y_alpha table")
    p.add_argument("--config", required=True)
    p.add_argument("--alphas", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("simulate", help="one nonlinear run with snapshots")
    p.add_argument("--config", required=True)
    p.add_argument("--model", choices=("op", "k"), required=True)
    p.add_argument("--alpha", type=float, default=8.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="alpha sweep and convergence-rate fits")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
