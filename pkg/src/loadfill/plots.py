"""Matplotlib figure rendering next to the delimited outputs.

Every report-producing command drops PNGs beside its CSV/JSON files so a
run can be eyeballed without further tooling. Keep these functions free of
analysis: they draw what the reports already contain.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_losses(report, path: str) -> None:
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    it = np.arange(1, len(report) + 1)
    ax1.plot(it, report.l_coarse, label="coarse content", lw=0.8)
    ax1.plot(it, report.l_content2, label="fine content", lw=0.8)
    ax1.set_yscale("log")
    ax1.set_ylabel("content loss")
    ax1.legend(loc="upper right", fontsize=8)
    ax2.plot(it, report.l_d, label="critic hinge", lw=0.8, color="tab:red")
    ax2.plot(it, report.l_adv, label="adversarial", lw=0.8, color="tab:green")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("adversarial losses")
    ax2.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_restorations(cases, path: str, max_panels: int = 6) -> None:
    """Panels of truth vs estimates around each event.

    ``cases`` rows: (label, window_kw, event_slice, estimates) where
    estimates maps names to kW vectors over the event.
    """
    cases = cases[:max_panels]
    n = len(cases)
    fig, axes = plt.subplots(n, 1, figsize=(8, 2.2 * n), squeeze=False)
    for ax, (label, window_kw, event_slice, estimates) in zip(axes[:, 0], cases):
        t = np.arange(len(window_kw))
        ax.plot(t, window_kw, color="0.4", lw=1.0, label="actual")
        te = t[event_slice]
        for name, est in estimates.items():
            ax.plot(te, est, lw=1.2, label=name)
        ax.axvspan(te[0], te[-1], color="tab:orange", alpha=0.12)
        ax.set_title(label, fontsize=8)
        ax.legend(fontsize=7, ncols=len(estimates) + 1)
    axes[-1, 0].set_xlabel("step")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_effect_curve(curve_pct: np.ndarray, counts: np.ndarray, resolution: int, path: str) -> None:
    minutes = (np.arange(len(curve_pct)) + 1) * resolution
    fig, ax1 = plt.subplots(figsize=(7, 4))
    ax1.axhline(0.0, color="0.6", lw=0.8)
    ax1.plot(minutes, curve_pct, marker="o", ms=3, color="tab:brown")
    ax1.set_xlabel("minutes since event start")
    ax1.set_ylabel("mean load change vs baseline (%)")
    ax2 = ax1.twinx()
    ax2.bar(minutes, counts, width=0.6 * resolution, color="tab:blue", alpha=0.15)
    ax2.set_ylabel("events covering step")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_nrmse_by_duration(buckets: dict[str, float], path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    names = list(buckets)
    ax.bar(names, [buckets[k] for k in names], color="tab:purple", alpha=0.8)
    ax.set_ylabel("mean event nRMSE")
    ax.set_xlabel("mask duration")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
