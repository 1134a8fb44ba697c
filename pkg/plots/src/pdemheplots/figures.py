"""CSV readers and figure renderers.

The renderers are strictly read-only visualizations of the harness output:
nothing is recomputed, smoothed, or resampled. Profile CSVs have the schema
``t,x,<value>`` with one row per (t, x) node; series CSVs have the schema
``t,<value>`` with one row per record time.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


class MalformedCsvError(ValueError):
    """The input file does not conform to the harness CSV schemas."""


@dataclass
class FigureSpec:
    """Everything needed to render one figure."""

    out_path: str
    cmap: str = "viridis"
    mark: float | None = None
    title: str | None = None
    xlabel: str = "t"
    ylabel: str = "x"
    dpi: int = 150


def _read_rows(path, n_cols):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsvError(f"{path}: empty file") from None
        if len(header) != n_cols:
            raise MalformedCsvError(
                f"{path}: expected {n_cols} columns, header is {header!r}")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != n_cols:
                raise MalformedCsvError(
                    f"{path}:{lineno}: expected {n_cols} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise MalformedCsvError(
                    f"{path}:{lineno}: non-numeric field in {row!r}") from None
    if not rows:
        raise MalformedCsvError(f"{path}: no data rows after header")
    return header, np.asarray(rows, dtype=np.float64)


def read_profile_csv(path):
    """Load a ``t,x,<value>`` CSV into (times, xs, values[nt, nx])."""
    header, data = _read_rows(path, 3)
    times = np.unique(data[:, 0])
    xs = np.unique(data[:, 1])
    if data.shape[0] != times.size * xs.size:
        raise MalformedCsvError(
            f"{path}: rows do not form a complete (t, x) grid "
            f"({data.shape[0]} rows vs {times.size} x {xs.size} nodes)")
    values = np.full((times.size, xs.size), np.nan)
    ti = np.searchsorted(times, data[:, 0])
    xi = np.searchsorted(xs, data[:, 1])
    values[ti, xi] = data[:, 2]
    if np.any(np.isnan(values)):
        raise MalformedCsvError(f"{path}: duplicate or missing (t, x) nodes")
    return times, xs, values


def read_error_csv(path):
    """Load a ``t,<value>`` CSV into (times, values)."""
    header, data = _read_rows(path, 2)
    times = data[:, 0]
    if np.any(np.diff(times) <= 0.0):
        raise MalformedCsvError(f"{path}: record times are not increasing")
    return times, data[:, 1]


def render_heatmap(csv_path, spec: FigureSpec) -> dict:
    """Render a space-time heatmap of a profile CSV; returns a report with
    the pixel-grid shape and the data extents actually drawn."""
    times, xs, values = read_profile_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7.0, 3.2), constrained_layout=True)
    mesh = ax.pcolormesh(times, xs, values.T, cmap=spec.cmap, shading="nearest")
    fig.colorbar(mesh, ax=ax)
    if spec.mark is not None:
        ax.axvline(spec.mark, color="0.5", linestyle=":", linewidth=1.2)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel(spec.ylabel)
    if spec.title:
        ax.set_title(spec.title)
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)
    return {
        "out": spec.out_path,
        "shape": (int(times.size), int(xs.size)),
        "t_extent": (float(times[0]), float(times[-1])),
        "x_extent": (float(xs[0]), float(xs[-1])),
        "value_range": (float(np.min(values)), float(np.max(values))),
    }


def render_error_curve(csv_path, spec: FigureSpec) -> dict:
    """Render a log-scale error curve; returns a report with the drawn data
    and marker position. The curve is the CSV data verbatim."""
    times, errs = read_error_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7.0, 3.2), constrained_layout=True)
    line, = ax.plot(times, errs, color="C0", linewidth=1.4)
    ax.set_yscale("log")
    if spec.mark is not None:
        ax.axvline(spec.mark, color="0.5", linestyle=":", linewidth=1.2)
    ax.set_xlabel(spec.xlabel)
    ax.set_ylabel("error norm")
    if spec.title:
        ax.set_title(spec.title)
    drawn_t = np.asarray(line.get_xdata(), dtype=np.float64)
    drawn_e = np.asarray(line.get_ydata(), dtype=np.float64)
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)
    return {
        "out": spec.out_path,
        "n_points": int(times.size),
        "t_extent": (float(times[0]), float(times[-1])),
        "mark": spec.mark,
        "curve_matches_csv": bool(
            np.array_equal(drawn_t, times) and np.array_equal(drawn_e, errs)),
    }
