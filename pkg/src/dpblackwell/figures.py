"""Matplotlib rendering of curve reports to image files.

Imported lazily by the CLI so library use never pays the matplotlib cost.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .curves import BayesErrorCurve, PrivacyProfile, TradeoffCurve

_FIG_SIZE = (4.8, 3.6)
_DPI = 150


def _new_axes(xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _finish(fig, ax, path) -> None:
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_tradeoff_figure(curves: Mapping[str, TradeoffCurve], path) -> None:
    fig, ax = _new_axes("type I error", "type II error")
    for label, curve in curves.items():
        ax.plot(curve.alphas, curve.betas, label=label)
    ax.plot([0, 1], [1, 0], ls=":", lw=0.8, color="grey")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    _finish(fig, ax, path)


def save_bayes_figure(curves: Mapping[str, BayesErrorCurve], path) -> None:
    fig, ax = _new_axes("prior", "minimum Bayes error")
    for label, curve in curves.items():
        ax.plot(curve.pis, curve.risks, label=label)
    ax.plot([0, 0.5, 1], [0, 0.5, 0], ls=":", lw=0.8, color="grey")
    ax.set_xlim(0, 1)
    _finish(fig, ax, path)


def save_profile_figure(profiles: Mapping[str, PrivacyProfile], path) -> None:
    fig, ax = _new_axes("epsilon", "delta")
    for label, profile in profiles.items():
        deltas = np.maximum(profile.deltas, 1e-16)
        ax.semilogy(profile.epsilons, deltas, label=label)
    _finish(fig, ax, path)


def save_sweep_figure(rows: Sequence[dict], path) -> None:
    """Heatmap of the base-to-target divergence over the sweep lattice."""
    ok = [row for row in rows if row["status"] == "ok"]
    ps = sorted({row["p"] for row in ok})
    ns = sorted({row["steps"] for row in ok})
    grid = np.full((len(ns), len(ps)), np.nan)
    for row in ok:
        grid[ns.index(row["steps"]), ps.index(row["p"])] = row["delta_ab"]
    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    mesh = ax.pcolormesh(range(len(ps) + 1), range(len(ns) + 1), grid, shading="flat")
    ax.set_xticks([i + 0.5 for i in range(len(ps))], [f"{p:.3g}" for p in ps], rotation=45)
    ax.set_yticks([i + 0.5 for i in range(len(ns))], [str(n) for n in ns])
    ax.set_xlabel("sampling rate")
    ax.set_ylabel("steps")
    fig.colorbar(mesh, ax=ax, label="divergence from base")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
