"""Command-line interface: solve, sweep, validate, bench.

Exit codes: 0 success, 1 configuration error, 2 numeric abort during
training, 3 validation failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import export
from . import network as net_mod
from . import validate as validate_mod
from .config import ConfigError, load_run_config
from .network import NonFiniteLossError
from .trainer import prepare, sweep_tau, train

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_VALIDATION = 3


def cmd_solve(args):
    run = load_run_config(args.config)
    cfg = run.training
    outdir = run.output.directory
    os.makedirs(outdir, exist_ok=True)
    setup = prepare(cfg)
    try:
        record = train(cfg, setup)
    except NonFiniteLossError as err:
        with open(os.path.join(outdir, "summary.json"), "w") as fh:
            json.dump(
                {
                    "aborted": True,
                    "abort_epoch": err.epoch,
                    "last_finite_loss": err.last_finite_loss,
                    "problem": cfg.problem,
                },
                fh,
                indent=2,
            )
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC

    record.checkpoint_path = os.path.join(outdir, "checkpoint.npz")
    net_mod.save_checkpoint(record.checkpoint_path, record.network, cfg.epochs)
    export.write_history_csv(os.path.join(outdir, "history.csv"), record)
    if run.output.csv_fields:
        columns = export.field_columns(record, setup, run.output.image_resolution)
        export.write_field_csv(os.path.join(outdir, "field.csv"), columns)
        if run.output.image:
            export.render_field_images(outdir, columns, run.output.image_resolution)
    summary = export.write_summary(os.path.join(outdir, "summary.json"), record)
    best = summary["best_l2_err"]
    best_txt = f"{best:.6e}" if best is not None else "n/a (no exact solution)"
    print(f"solve finished: best_l2_err = {best_txt} (epoch {summary['best_epoch']})")
    if record.final_scalars:
        scalars = ", ".join(f"{k} = {v:.4f}" for k, v in sorted(record.final_scalars.items()))
        print(f"final indicator exponents: {scalars}")
    print(f"artifacts in {outdir}")
    return EXIT_OK


def cmd_sweep(args):
    run = load_run_config(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"--values must be a comma-separated float list, got {args.values!r}")
    outdir = run.output.directory
    os.makedirs(outdir, exist_ok=True)
    rows = sweep_tau(run.training, values, args.seeds, param=args.param)
    path = os.path.join(outdir, f"sweep_{args.param}.csv")
    export.write_sweep_csv(path, rows, args.param)
    valid = [r for r in rows if not np.isnan(r.mean_best_l2)]
    if valid:
        best = min(valid, key=lambda r: r.mean_best_l2)
        print(
            f"sweep over {args.param}: argmin {best.value:g} "
            f"with mean best_l2_err {best.mean_best_l2:.6e}"
        )
    else:
        print("sweep produced no successful runs", file=sys.stderr)
    print(f"table written to {path}")
    return EXIT_OK if valid else EXIT_NUMERIC


def cmd_validate(args):
    results = validate_mod.run_suite(
        flip_jacobian_sign=(args.inject_bug == "flip-jacobian-sign")
    )
    width = max(len(name) for name, _, _ in results)
    all_ok = True
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        all_ok &= passed
        print(f"{name.ljust(width)}  {status}  {detail}")
    return EXIT_OK if all_ok else EXIT_VALIDATION


def cmd_bench(args):
    try:
        cells = []
        for token in args.cells.split(","):
            nx, ny = token.lower().split("x")
            cells.append((int(nx), int(ny)))
    except ValueError:
        raise ConfigError(f"--cells must look like '1x1,4x4,16x16', got {args.cells!r}")
    rows = validate_mod.run_bench(cells)
    for row in rows:
        print(
            f"{row['n_cells']:5d} cells: loop {row['loop_ms']:9.2f} ms, "
            f"tensor {row['tensor_ms']:7.3f} ms, speedup {row['speedup']:8.1f}x"
        )
    if args.output:
        export.write_bench_csv(args.output, rows)
        print(f"table written to {args.output}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vpinn",
        description="Variational PINN solver for convection-dominated CDR problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="train a run configuration")
    p_solve.add_argument("config", help="path to a YAML run configuration")
    p_solve.set_defaults(fn=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep a stabilization parameter")
    p_sweep.add_argument("config", help="path to a YAML run configuration")
    p_sweep.add_argument(
        "--param", choices=("tau", "tau_growth", "lambda"), default="tau"
    )
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--seeds", type=int, default=1, help="seeds per value")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_val = sub.add_parser("validate", help="run the fast property suite")
    p_val.add_argument("--inject-bug", choices=("flip-jacobian-sign",), default=None,
                       help=argparse.SUPPRESS)
    p_val.set_defaults(fn=cmd_validate)

    p_bench = sub.add_parser("bench", help="loop vs tensor assembly benchmark")
    p_bench.add_argument("--cells", default="1x1,4x4,16x16")
    p_bench.add_argument("--output", default=None, help="CSV output path")
    p_bench.set_defaults(fn=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.fn(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        code = EXIT_CONFIG
    except NonFiniteLossError as err:
        print(f"numeric abort: {err}", file=sys.stderr)
        code = EXIT_NUMERIC
    return code


if __name__ == "__main__":
    sys.exit(main())
