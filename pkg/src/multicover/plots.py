"""Deterministic SVG rendering for traces and grid maps.

All figures are rendered with a fixed hash salt, embedded text paths, and no
date metadata, so identical inputs produce byte-identical SVG files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_RC = {
    "svg.hashsalt": "multicover",
    "svg.fonttype": "path",
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
}


class PlotDataError(RuntimeError):
    """A figure's source data is missing or empty."""


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _read_columns(path) -> dict[str, list[str]]:
    path = Path(path)
    if not path.exists():
        raise PlotDataError(f"missing trace CSV {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise PlotDataError(f"no header in {path}")
        cols: dict[str, list[str]] = {name: [] for name in reader.fieldnames}
        for row in reader:
            for name in reader.fieldnames:
                cols[name].append(row[name])
    if not next(iter(cols.values()), []):
        raise PlotDataError(f"no data rows in {path}")
    return cols


def plot_trace(trace_csv, out_svg) -> Path:
    """Line plot of the trace's main quantities vs step (schema-aware)."""
    cols = _read_columns(trace_csv)
    steps = np.array([float(s) for s in cols["step"]])
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if "cumulative_regret" in cols:
            ax.plot(steps, [float(x) for x in cols["cumulative_regret"]],
                    label="cumulative regret", color="tab:blue")
            ax.plot(steps, [float(x) for x in cols["cost_true"]],
                    label="coverage cost (true demand)", color="tab:orange", alpha=0.7)
            ax.set_ylabel("regret / cost")
        else:
            ax.plot(steps, [float(x) for x in cols["total_cost"]],
                    label="coverage cost", color="tab:orange")
            ax.plot(steps, [float(x) for x in cols["U1"]],
                    label="best-assignment cost", color="tab:blue")
            ax.set_ylabel("cost")
        ax.set_xlabel("step")
        ax.legend()
        fig.tight_layout()
        return _save(fig, out_svg)


def plot_loglog_regret(trace_csv, out_svg, guide_slope: float = 2.0 / 3.0) -> Path:
    """Log-log cumulative regret with a reference guide line of fixed slope."""
    cols = _read_columns(trace_csv)
    if "cumulative_regret" not in cols:
        raise PlotDataError(f"{trace_csv} has no cumulative_regret column")
    cum = np.array([float(x) for x in cols["cumulative_regret"]])
    steps = np.arange(1, len(cum) + 1, dtype=float)
    keep = cum > 0
    if not keep.any():
        raise PlotDataError(f"{trace_csv} has no positive cumulative regret")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        ax.loglog(steps[keep], cum[keep], label="cumulative regret", color="tab:blue")
        t0, c0 = steps[keep][0], cum[keep][0]
        ax.loglog(steps[keep], c0 * (steps[keep] / t0) ** guide_slope,
                  linestyle="--", color="gray", label=f"slope {guide_slope:.3g} guide")
        ax.set_xlabel("step")
        ax.set_ylabel("cumulative regret")
        ax.legend()
        fig.tight_layout()
        return _save(fig, out_svg)


def plot_grid_heatmap(values: np.ndarray, out_svg, title: str, cmap: str = "viridis") -> Path:
    """Heatmap of a (rows, cols) array with a colorbar."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.size == 0:
        raise PlotDataError(f"heatmap for {out_svg} needs a non-empty 2-D array")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        im = ax.imshow(values, origin="lower", cmap=cmap, interpolation="nearest")
        fig.colorbar(im, ax=ax)
        ax.set_title(title)
        ax.set_xlabel("col")
        ax.set_ylabel("row")
        fig.tight_layout()
        return _save(fig, out_svg)
