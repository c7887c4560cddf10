"""Figure builders over the solver CLI's CSV outputs.

This package talks to the solver only through two documented CSV
schemas and never imports it:

* fit history:   iteration,objective,residual,mu,s_support_min,
                 s_support_med,s_support_max
* accuracy sweep: lambda1,lambda2,lambda3,m,alpha,repeat,accuracy

Four figure kinds are supported.  ``convergence`` draws objective and
constraint residual against iteration on twin axes; ``grid-surface``
draws mean accuracy over the (lambda1, lambda2) grid on log axes;
``lambda3-bars`` draws mean accuracy with error bars per lambda3;
``dim-curve`` draws a mean and standard-deviation band against the
embedding dimension.  Regularizer axes are logarithmic (the sweeps span
many decades); iteration and dimension axes are linear.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

HISTORY_COLUMNS = (
    "iteration",
    "objective",
    "residual",
    "mu",
    "s_support_min",
    "s_support_med",
    "s_support_max",
)
SWEEP_COLUMNS = ("lambda1", "lambda2", "lambda3", "m", "alpha", "repeat", "accuracy")

KINDS = ("convergence", "grid-surface", "lambda3-bars", "dim-curve")


class FormatError(ValueError):
    """The input CSV does not match the documented schema."""


@dataclass(frozen=True)
class FigureRequest:
    kind: str
    input_csv: str | Path
    output_image: str | Path
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind '{self.kind}' (want one of {KINDS})")


def read_columns(path: str | Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Load a CSV into named float columns, insisting on the schema."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV") from None
        missing = [name for name in required if name not in header]
        if missing:
            raise FormatError(f"{path}: missing columns: {', '.join(missing)}")
        index = {name: header.index(name) for name in required}
        columns: dict[str, list[float]] = {name: [] for name in required}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(
                    f"{path} line {lineno}: expected {len(header)} fields, found {len(row)}"
                )
            try:
                for name in required:
                    columns[name].append(float(row[index[name]]))
            except ValueError:
                raise FormatError(f"{path} line {lineno}: non-numeric field") from None
    if not columns[required[0]]:
        raise FormatError(f"{path}: no data rows")
    return {name: np.asarray(values) for name, values in columns.items()}


def _group_stats(keys: np.ndarray, values: np.ndarray):
    """Mean and population std of ``values`` per sorted unique key."""
    uniq = np.unique(keys)
    means = np.array([values[keys == key].mean() for key in uniq])
    stds = np.array([values[keys == key].std() for key in uniq])
    return uniq, means, stds


def build_figure(request: FigureRequest) -> Figure:
    """Construct the matplotlib figure for a request without saving it."""
    fig = Figure(figsize=(6.0, 4.2), constrained_layout=True)
    ax = fig.add_subplot(111)

    if request.kind == "convergence":
        data = read_columns(request.input_csv, HISTORY_COLUMNS)
        iterations = data["iteration"]
        ax.plot(iterations, data["objective"], color="tab:blue", marker="o",
                markersize=3, label="objective")
        ax.set_xlabel(request.xlabel or "iteration")
        ax.set_ylabel(request.ylabel or "objective value", color="tab:blue")
        twin = ax.twinx()
        twin.plot(iterations, data["residual"], color="tab:red", marker="s",
                  markersize=3, label="constraint residual")
        twin.set_ylabel("constraint residual", color="tab:red")
        twin.set_yscale("log")

    elif request.kind == "grid-surface":
        data = read_columns(request.input_csv, SWEEP_COLUMNS)
        l1 = np.unique(data["lambda1"])
        l2 = np.unique(data["lambda2"])
        grid = np.full((l2.size, l1.size), np.nan)
        for i, b in enumerate(l2):
            for j, a in enumerate(l1):
                cell = (data["lambda1"] == a) & (data["lambda2"] == b)
                if np.any(cell):
                    grid[i, j] = data["accuracy"][cell].mean()
        mesh = ax.pcolormesh(l1, l2, grid, shading="nearest", cmap="viridis")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(request.xlabel or "lambda1")
        ax.set_ylabel(request.ylabel or "lambda2")
        fig.colorbar(mesh, ax=ax, label="mean accuracy")

    elif request.kind == "lambda3-bars":
        data = read_columns(request.input_csv, SWEEP_COLUMNS)
        uniq, means, stds = _group_stats(data["lambda3"], data["accuracy"])
        positions = np.arange(uniq.size)
        ax.bar(positions, means, yerr=stds, capsize=4, color="tab:blue")
        ax.set_xticks(positions, [f"{v:g}" for v in uniq])
        ax.set_xlabel(request.xlabel or "lambda3")
        ax.set_ylabel(request.ylabel or "mean accuracy")

    else:  # dim-curve
        data = read_columns(request.input_csv, SWEEP_COLUMNS)
        uniq, means, stds = _group_stats(data["m"], data["accuracy"])
        ax.plot(uniq, means, color="tab:blue", marker="o")
        ax.fill_between(uniq, means - stds, means + stds, color="tab:blue", alpha=0.25)
        ax.set_xlabel(request.xlabel or "embedding dimension")
        ax.set_ylabel(request.ylabel or "mean accuracy")

    if request.title:
        ax.set_title(request.title)
    return fig


def render(request: FigureRequest) -> Path:
    """Build and save the figure; returns the written image path."""
    fig = build_figure(request)
    out = Path(request.output_image)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    return out
