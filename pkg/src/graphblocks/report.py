"""Figure rendering for run reports.

Renders matplotlib figures next to the delimited outputs: entropy growth
curves, OTOC light-cone heatmaps, and the descriptor/velocity scatter
plots. Everything draws from the CSV/JSON files a simulation wrote, so
figures can be regenerated without rerunning circuits.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runio import read_entropy_csv, read_otoc_csv


def plot_entropy_curves(runs: list[tuple[str, np.ndarray]], path: str | Path,
                        ylabel: str = "half-chain entropy [bits]") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, series in runs:
        ax.plot(np.arange(series.size), series, label=label, lw=1.4)
    ax.set_xlabel("layer t")
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.set_title("entanglement growth")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_otoc_field(field: np.ndarray, path: str | Path, label: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(field.T, origin="lower", aspect="auto",
                   interpolation="nearest", cmap="magma",
                   extent=(0, field.shape[0] - 1, 1, field.shape[1]))
    ax.set_xlabel("layer t")
    ax.set_ylabel("site x")
    ax.set_title(f"averaged OTOC {label}".strip())
    fig.colorbar(im, ax=ax, label="C(x, t)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def plot_scatter(rows: list[tuple], path: str | Path, xlabel: str,
                 ylabel: str, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    sizes = sorted({r[3] for r in rows})
    markers = dict(zip(sizes, ["o", "s", "^", "D", "v", "P"]))
    for n in sizes:
        xs = [r[0] for r in rows if r[3] == n]
        ys = [r[1] for r in rows if r[3] == n]
        ax.scatter(xs, ys, marker=markers[n], label=f"n={n}", alpha=0.85)
    for x, y, name, _ in rows:
        ax.annotate(name, (x, y), fontsize=6, xytext=(2, 2),
                    textcoords="offset points")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if sizes:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_run_figures(run_dir: str | Path, out_dir: str | Path | None = None) -> list[Path]:
    """Figures for one simulation output directory."""
    run_dir = Path(run_dir)
    out_dir = run_dir if out_dir is None else Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = json.loads((run_dir / "velocities.json").read_text())
    label = meta.get("block", run_dir.name)
    written = []
    mean, _, _ = read_entropy_csv(run_dir / "entropy.csv")
    written.append(plot_entropy_curves([(label, mean)],
                                       out_dir / "entropy_growth.png"))
    field = read_otoc_csv(run_dir / "otoc.csv")
    written.append(plot_otoc_field(field, out_dir / "otoc_field.png", label))
    return written
