"""Structured result files: field/history/sweep CSVs, summary JSON, images.

CSV is the source of truth; images are optional contour rasters rendered
with the viridis colormap.  Field files are written row-major over the
evaluation grid (x fastest).
"""

import csv
import json
import os

import numpy as np

from . import network as net_mod
from .boundary import tau_field
from .trainer import evaluation_grid, make_predictor


def _fmt(value):
    return format(float(value), ".17g")


def write_field_csv(path, columns):
    """Write named columns (dict of equal-length 1-D arrays) as CSV."""
    names = list(columns)
    rows = np.column_stack([np.asarray(columns[n], dtype=np.float64) for n in names])
    if not np.all(np.isfinite(rows)):
        raise ValueError("refusing to export non-finite field values")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_field_csv(path):
    """Read a field CSV back into a dict of float64 columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        data = [[float(v) for v in row] for row in reader]
    arr = np.asarray(data, dtype=np.float64)
    return {name: arr[:, i] for i, name in enumerate(names)}


def field_columns(record, setup, grid_n=100):
    """Evaluation-grid columns for a trained run: x, y, u_pred[, ...]."""
    problem = setup.problem
    points = evaluation_grid(problem.domain_bounds, grid_n)
    predict = make_predictor(record.network, setup.indicator, setup.extension)
    cols = {"x": points[:, 0], "y": points[:, 1], "u_pred": predict(points)}
    if problem.exact is not None:
        cols["u_exact"] = problem.exact.u(points)
        cols["abs_err"] = np.abs(cols["u_pred"] - cols["u_exact"])
    if record.network.n_out >= 2:
        batch = net_mod.forward_with_gradients(record.network, points)
        cols["tau"] = tau_field(
            batch.u[:, 1],
            setup.bsetup.tau_mask,
            record.config.loss.tau_growth,
            points,
        )
    from .boundary import indicator_eval

    cols["h"], _, _ = indicator_eval(
        setup.indicator, record.network.extra_scalars, points
    )
    return cols


def write_history_csv(path, record):
    errors = {epoch: (l2, linf) for epoch, l2, linf in record.error_history}
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss", "l2_err", "linf_err"])
        for epoch, loss_value in enumerate(record.loss_history, start=1):
            l2, linf = errors.get(epoch, ("", ""))
            writer.writerow(
                [epoch, _fmt(loss_value), l2 and _fmt(l2), linf and _fmt(linf)]
            )


def write_summary(path, record, extra=None):
    summary = {
        "problem": record.config.problem,
        "epsilon": record.config.epsilon,
        "mode": record.config.loss.mode,
        "epochs": record.config.epochs,
        "seed": record.config.seed,
        "best_l2_err": record.best_l2_err,
        "best_epoch": record.best_epoch,
        "final_loss": float(record.loss_history[-1]) if len(record.loss_history) else None,
        "final_scalars": record.final_scalars,
        "wall_time_s": record.wall_time,
        "checkpoint": record.checkpoint_path,
    }
    if extra:
        summary.update(extra)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def write_sweep_csv(path, rows, param):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param, "mean_best_l2_err", "min", "max", "failed"])
        for row in rows:
            writer.writerow(
                [
                    _fmt(row.value),
                    "" if np.isnan(row.mean_best_l2) else _fmt(row.mean_best_l2),
                    "" if np.isnan(row.min_best_l2) else _fmt(row.min_best_l2),
                    "" if np.isnan(row.max_best_l2) else _fmt(row.max_best_l2),
                    int(row.failed),
                ]
            )


def write_bench_csv(path, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_cells", "loop_ms", "tensor_ms", "speedup"])
        for row in rows:
            writer.writerow(
                [row["n_cells"], _fmt(row["loop_ms"]), _fmt(row["tensor_ms"]), _fmt(row["speedup"])]
            )


def render_field_images(outdir, columns, grid_n):
    """Contour panels (u_pred, abs_err, tau, h when present) as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = columns["x"].reshape(grid_n, grid_n)
    y = columns["y"].reshape(grid_n, grid_n)
    written = []
    for name in ("u_pred", "abs_err", "tau", "h"):
        if name not in columns:
            continue
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        z = columns[name].reshape(grid_n, grid_n)
        im = ax.contourf(x, y, z, levels=40, cmap="viridis")
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_title(name)
        path = os.path.join(outdir, f"{name}.png")
        fig.savefig(path, dpi=130, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
