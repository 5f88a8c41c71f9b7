"""Figure rendering for the report paths. All figures go to files."""
from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .mixtures import GaussianMixture, gmm_pdf, gmm_quantile


def plot_loss_curves(curves: dict[str, list[float]], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    epochs = np.arange(1, len(curves["train"]) + 1)
    for name, style in (("train", "-"), ("val", "--"), ("test", ":")):
        ax.plot(epochs, curves[name], style, label=name)
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_ppf_bus(bus: int, grid: np.ndarray, pdf: np.ndarray,
                 mc_samples: np.ndarray | None, v_limit: float | None,
                 path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    if mc_samples is not None:
        ax.hist(mc_samples, bins=80, density=True, alpha=0.4,
                label="Monte Carlo", color="tab:pink")
    ax.plot(grid, pdf, color="tab:orange", lw=2, label="analytical")
    if v_limit is not None:
        ax.axvline(v_limit, color="darkred", ls="--", lw=1,
                   label=f"limit {v_limit}")
    ax.set_xlabel(f"bus {bus} voltage (p.u.)")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_hc_stations(
    station_gmms: dict[int, GaussianMixture],
    floors: dict[int, float],
    p_bar_rt: dict[int, float],
    p_bar_lt: dict[int, float] | None,
    path: Path,
) -> None:
    """Per-station demand density with the satisfaction floor and the
    real-time / long-term accommodation caps."""
    sids = sorted(station_gmms)
    n = len(sids)
    cols = 4
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.4 * rows),
                             squeeze=False)
    for k, sid in enumerate(sids):
        ax = axes[k // cols][k % cols]
        g = station_gmms[sid]
        hi = gmm_quantile(g, 0.9995)
        grid = np.linspace(0.0, hi * 1.15, 300)
        ax.fill_between(grid, gmm_pdf(g, grid), alpha=0.35, color="tab:blue")
        ax.axvline(floors[sid], color="black", ls=":", lw=1.2, label="floor")
        ax.axvline(p_bar_rt[sid], color="tab:red", ls="--", lw=1.4,
                   label="real-time")
        if p_bar_lt is not None:
            ax.axvline(min(p_bar_lt[sid], grid[-1]), color="tab:blue",
                       ls="--", lw=1.2, label="long-term")
        ax.set_title(f"station {sid}", fontsize=9)
        ax.set_yticks([])
        if k == 0:
            ax.legend(fontsize=7)
    for k in range(n, rows * cols):
        axes[k // cols][k % cols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_station_satisfaction(
    stations: list[int],
    voltages: dict[int, float],
    expected_demand: dict[int, float],
    expected_satisfaction: dict[int, float],
    path: Path,
) -> None:
    x = np.arange(len(stations))
    fig, ax1 = plt.subplots(figsize=(7.5, 4))
    width = 0.38
    ax1.bar(x - width / 2, [expected_demand[s] for s in stations], width,
            color="lightsteelblue", label="expected demand")
    ax1.bar(x + width / 2, [expected_satisfaction[s] for s in stations],
            width, color="teal", label="expected satisfaction")
    ax1.set_xticks(x, [str(s) for s in stations])
    ax1.set_xlabel("station")
    ax1.set_ylabel("power (p.u.)")
    ax2 = ax1.twinx()
    ax2.plot(x, [voltages[s] for s in stations], "o-", color="firebrick",
             label="bus voltage")
    ax2.set_ylabel("voltage (p.u.)")
    lines1, labels1 = ax1.get_legend_handles_labels()
    lines2, labels2 = ax2.get_legend_handles_labels()
    ax1.legend(lines1 + lines2, labels1 + labels2, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
