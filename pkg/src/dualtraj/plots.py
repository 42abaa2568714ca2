"""Batch SVG plots regenerated from emitted CSV files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .discretize import read_trajectory_csv  # noqa: E402


def plot_trajectory(csv_path, svg_path, title=""):
    """One panel per state component against time."""
    ts, X = read_trajectory_csv(csv_path)
    d = X.shape[0]
    fig, axes = plt.subplots(d, 1, figsize=(7, 2.2 * d), sharex=True,
                             squeeze=False)
    for i in range(d):
        ax = axes[i, 0]
        ax.plot(ts, X[i], lw=0.8)
        ax.set_ylabel(f"y{i + 1}")
        ax.grid(True, alpha=0.3)
    axes[-1, 0].set_xlabel("t")
    if title:
        axes[0, 0].set_title(title)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)


def plot_overlay(csv_paths, labels, svg_path, component=0, title=""):
    """Overlay one component from several trajectory CSVs."""
    fig, ax = plt.subplots(figsize=(7, 3.2))
    for path, label in zip(csv_paths, labels):
        ts, X = read_trajectory_csv(path)
        ax.plot(ts, X[component], lw=0.8, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(f"y{component + 1}")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)


def plot_divergence(curve_csv, svg_path, title="baseline separation"):
    """Separation curve between two baseline integrations."""
    import numpy as np

    data = np.loadtxt(curve_csv, delimiter=",", skiprows=1, ndmin=2)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.semilogy(data[:, 0], np.maximum(data[:, 1], 1e-300), lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("separation")
    ax.grid(True, alpha=0.3)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
