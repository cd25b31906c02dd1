"""Figure rendering for the command-line reports.

All functions write PNG files and return the path; nothing is shown
interactively.  The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ctrlaug.augpool import OperationKind  # noqa: E402
from ctrlaug.ror import Curve, ErfFit  # noqa: E402


def render_ror_curves(
    curves: dict[OperationKind, Curve],
    fits: dict[OperationKind, ErfFit],
    path: str | Path,
    retention: float | None = None,
) -> Path:
    """Grid of per-operation robustness curves with their erf fits."""
    kinds = list(curves)
    cols = 5
    rows = math.ceil(len(kinds) / cols)
    fig, axes = plt.subplots(rows, cols, figsize=(3.0 * cols, 2.4 * rows), squeeze=False)
    xs = [i / 100.0 for i in range(101)]
    for i, kind in enumerate(kinds):
        ax = axes[i // cols][i % cols]
        pts = curves[kind]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o", ms=3, label="measured")
        fit = fits[kind]
        ax.plot(xs, [fit.predict(x) for x in xs], "-", lw=1.2, label=f"a={fit.a:.2f} b={fit.b:.2f}")
        if retention is not None:
            ax.axhline(retention, color="gray", lw=0.8, ls="--")
        ax.set_title(kind.value, fontsize=8)
        ax.set_ylim(0.0, 1.15)
        ax.tick_params(labelsize=7)
        ax.legend(fontsize=6, loc="lower left")
    for j in range(len(kinds), rows * cols):
        axes[j // cols][j % cols].axis("off")
    fig.suptitle("relative accuracy vs strength", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_ctrl_sim(trace, setpoint: float, path: str | Path) -> Path:
    """Loss ratio and retention target over simulated phases."""
    phases = [t.phase for t in trace]
    ratios = [t.loss_ratio for t in trace]
    retentions = [t.retention for t in trace]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5), sharex=True)
    ax1.plot(phases, ratios, "o-", ms=3)
    ax1.axhline(setpoint, color="tab:red", lw=1.0, ls="--", label=f"setpoint {setpoint}")
    ax1.set_ylabel("loss ratio")
    ax1.legend(fontsize=8)
    ax2.plot(phases, retentions, "s-", ms=3, color="tab:green")
    ax2.set_ylabel("retention target")
    ax2.set_xlabel("phase")
    ax2.set_ylim(-0.02, 1.02)
    saturated = [t.phase for t in trace if t.saturated]
    if saturated:
        for ax in (ax1, ax2):
            ax.axvline(saturated[0], color="tab:orange", lw=1.0, ls=":")
        ax2.text(saturated[0], 0.05, " saturated", fontsize=8, color="tab:orange")
    fig.suptitle("feedback loop simulation", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_training(phases: list[dict], setpoint: float, path: str | Path) -> Path:
    """Per-phase ratio, retention, and loss traces from a run log."""
    idx = [p["phase"] for p in phases]
    ratios = [p["loss_ratio"] for p in phases]
    retentions = [p["retention"] for p in phases]
    train_losses = [x for p in phases for x in p["train_epoch_losses"]]
    val_losses = [x for p in phases for x in p["val_epoch_losses"]]
    epochs = list(range(1, len(train_losses) + 1))

    fig, axes = plt.subplots(3, 1, figsize=(7, 7.5), sharex=False)
    axes[0].plot(epochs, train_losses, lw=1.0, label="train")
    axes[0].plot(epochs, val_losses, lw=1.0, label="val")
    axes[0].set_ylabel("loss")
    axes[0].set_xlabel("epoch")
    axes[0].legend(fontsize=8)
    axes[1].plot(idx, ratios, "o-", ms=3)
    axes[1].axhline(setpoint, color="tab:red", lw=1.0, ls="--")
    axes[1].set_ylabel("loss ratio")
    axes[2].plot(idx, retentions, "s-", ms=3, color="tab:green")
    axes[2].set_ylabel("retention target")
    axes[2].set_xlabel("phase")
    fig.suptitle("training run", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def render_report(rows: list[dict], path: str | Path) -> Path:
    """Aggregate bar chart: metric means with 95% confidence half-widths."""
    labels = [r["metric"] for r in rows]
    means = [r["mean"] for r in rows]
    halves = [r["ci95_halfwidth"] for r in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(rows)), 4))
    ax.bar(range(len(rows)), means, yerr=halves, capsize=4, color="tab:blue", alpha=0.8)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean over runs (95% CI)")
    fig.suptitle("run aggregate", fontsize=11)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
