"""Render comparison figures from a run directory's plot-ready CSVs.

Produces, next to the delimited outputs, an item-parameter bias panel
(full-data estimate vs. subsample deviation for a, b, and c when present)
and an ability density panel (theta from the subsample run against theta
from the full run, with the identity line)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import gaussian_kde

from .errors import ConfigError
from .harness import read_csv

__all__ = ["render_report"]


def _load_columns(path, names):
    rows = read_csv(path)
    return {name: np.array([float(r[name]) for r in rows]) for name in names}


def _item_bias_figure(bias, path):
    has_c = np.any(bias["c_full"] != 0.0) or np.any(bias["c_core"] != 0.0)
    params = ["a", "b"] + (["c"] if has_c else [])
    fig, axes = plt.subplots(1, len(params), figsize=(4.2 * len(params), 3.6))
    axes = np.atleast_1d(axes)
    for ax, name in zip(axes, params):
        full = bias[f"{name}_full"]
        dev = bias[f"{name}_core"] - full
        ax.axhline(0.0, color="0.6", lw=0.8)
        ax.scatter(full, dev, s=12, alpha=0.6, edgecolors="none")
        ax.set_xlabel(f"{name} (full data)")
        ax.set_ylabel(f"{name} deviation")
        span = 2 * np.std(full) if np.std(full) > 0 else 1.0
        ax.set_ylim(-span, span)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _theta_density_figure(pairs, path, sample_cap=20000):
    x = pairs["theta_full"]
    y = pairs["theta_core"]
    if len(x) > sample_cap:  # density coloring cost grows quadratically
        step = len(x) // sample_cap + 1
        x, y = x[::step], y[::step]
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    if len(x) >= 10 and np.std(x) > 0 and np.std(y) > 0:
        xy = np.vstack([x, y])
        density = gaussian_kde(xy)(xy)
        order = np.argsort(density)
        ax.scatter(x[order], y[order], c=density[order], s=8, cmap="viridis",
                   edgecolors="none")
    else:
        ax.scatter(x, y, s=8)
    lim = max(np.abs(x).max(), np.abs(y).max(), 1.0) * 1.05
    ax.plot([-lim, lim], [-lim, lim], color="0.4", lw=0.8)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_xlabel("theta (full data)")
    ax.set_ylabel("theta (subsample)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(run_dir):
    """Render figures for a completed run directory; returns written paths."""
    run = Path(run_dir)
    bias_path = run / "item_bias.csv"
    pairs_path = run / "theta_pairs.csv"
    if not bias_path.is_file() or not pairs_path.is_file():
        raise ConfigError(f"{run}: not a completed run directory "
                          "(missing item_bias.csv / theta_pairs.csv)")
    fig_dir = run / "figures"
    fig_dir.mkdir(exist_ok=True)
    bias = _load_columns(bias_path, ["a_full", "b_full", "c_full",
                                     "a_core", "b_core", "c_core"])
    pairs = _load_columns(pairs_path, ["theta_full", "theta_core"])
    out1 = fig_dir / "item_bias.png"
    out2 = fig_dir / "theta_density.png"
    _item_bias_figure(bias, out1)
    _theta_density_figure(pairs, out2)
    return [out1, out2]
