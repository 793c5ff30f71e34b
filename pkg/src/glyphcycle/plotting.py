"""Figures written next to the tab/space-delimited reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LOSS_LABELS = {
    "gan_g": r"$L_{GAN,G}$",
    "gan_f": r"$L_{GAN,F}$",
    "cycle": r"$L_{cycle}$",
    "disc_g": r"$L_{D_G}$",
    "disc_f": r"$L_{D_F}$",
}

STYLE = {
    "figure.figsize": (7.0, 4.0),
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _smooth(values, window):
    if window <= 1 or len(values) < window:
        return np.asarray(values, dtype=float)
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def plot_losses(rows, path, window=10):
    """``rows``: dicts with the five loss keys plus ``lr``; one point per step."""
    with plt.rc_context(STYLE):
        fig, (ax, ax_lr) = plt.subplots(2, 1, sharex=True, gridspec_kw={"height_ratios": [3, 1]})
        steps = np.arange(len(rows))
        for key, label in LOSS_LABELS.items():
            ys = _smooth([r[key] for r in rows], window)
            ax.plot(steps[len(steps) - len(ys) :], ys, label=label, lw=1.2)
        ax.set_ylabel("loss (moving mean)")
        ax.legend(ncol=5, frameon=False, loc="upper right")
        ax_lr.plot(steps, [r["lr"] for r in rows], color="0.3", lw=1.0)
        ax_lr.set_ylabel("lr")
        ax_lr.set_xlabel("step")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


def plot_metrics(values, path):
    with plt.rc_context(STYLE):
        fig, (ax_d, ax_a) = plt.subplots(1, 2, figsize=(7.0, 3.0))
        keys = ["self_split_discrepancy", "style_discrepancy"]
        ax_d.bar(["self-split", "generated"], [values[k] for k in keys], color=["0.6", "C0"])
        if "source_discrepancy" in values:
            ax_d.bar(["source"], [values["source_discrepancy"]], color="C3")
        ax_d.set_ylabel("style discrepancy")
        ax_a.bar(["top-1", "top-5"], [values["content_top1"], values["content_top5"]], color="C2")
        ax_a.set_ylim(0, 1)
        ax_a.set_ylabel("content accuracy")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)


def save_montage_png(plane, path, column_titles=None):
    h, w = plane.shape
    with plt.rc_context(STYLE):
        fig = plt.figure(figsize=(max(2.0, w / 60), max(2.0, h / 60)))
        ax = fig.add_axes([0, 0, 1, 0.94 if column_titles else 1])
        ax.imshow(plane, cmap="gray", vmin=0, vmax=255, interpolation="nearest")
        ax.set_axis_off()
        if column_titles:
            n = len(column_titles)
            for i, title in enumerate(column_titles):
                fig.text((i + 0.5) / n, 0.97, title, ha="center", va="center", fontsize=7)
        fig.savefig(path, dpi=120)
        plt.close(fig)
