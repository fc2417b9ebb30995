"""Matplotlib renderings that accompany the delimited reports."""

from __future__ import annotations

import os
from pathlib import Path
from typing import TYPE_CHECKING

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

if TYPE_CHECKING:
    from .metrics import CaseReport

_METRIC_COLS = ("l1", "mse", "psnr", "ssim", "iou", "bg_l1")


def _save(fig, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    fig.savefig(tmp, dpi=110, format=path.suffix.lstrip(".") or "png")
    plt.close(fig)
    os.replace(tmp, path)


def render_case_figure(reports: "list[CaseReport]", path: str | Path) -> None:
    """One bar panel per metric across cases."""
    fig, axes = plt.subplots(2, 3, figsize=(11, 6))
    names = [r.case for r in reports]
    xs = np.arange(len(names))
    for ax, col in zip(axes.ravel(), _METRIC_COLS):
        values = [getattr(r, col) for r in reports]
        heights = [0.0 if v is None else v for v in values]
        bars = ax.bar(xs, heights, color="#4878a8")
        for bar, v in zip(bars, values):
            if v is None:
                bar.set_color("#cccccc")
        ax.set_title(col)
        ax.set_xticks(xs)
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=7)
    fig.suptitle("per-case metrics")
    fig.tight_layout()
    _save(fig, path)


def render_sweep_figure(
    param: str, values: list, rows: "list[CaseReport]", path: str | Path
) -> None:
    """Metric trends across one ablation sweep."""
    fig, axes = plt.subplots(2, 3, figsize=(11, 6))
    labels = [str(v) for v in values]
    xs = np.arange(len(labels))
    for ax, col in zip(axes.ravel(), _METRIC_COLS):
        ys = [getattr(r, col) for r in rows]
        known = [(x, y) for x, y in zip(xs, ys) if y is not None]
        if known:
            ax.plot([x for x, _ in known], [y for _, y in known], marker="o", color="#a85448")
        ax.set_title(col)
        ax.set_xticks(xs)
        ax.set_xticklabels(labels, fontsize=8)
        ax.set_xlabel(param)
    fig.suptitle(f"sweep over {param}")
    fig.tight_layout()
    _save(fig, path)


def render_localization_figure(
    image: np.ndarray,
    saliency: np.ndarray | None,
    seg_labels: np.ndarray | None,
    roi: np.ndarray,
    path: str | Path,
) -> None:
    """Input, segments, saliency, and RoI overlay in one strip."""
    fig, axes = plt.subplots(1, 4, figsize=(13, 3.4))
    axes[0].imshow(np.clip(image, 0, 1))
    axes[0].set_title("input")
    if seg_labels is not None:
        axes[1].imshow(seg_labels, cmap="tab20", interpolation="nearest")
    axes[1].set_title("segments")
    if saliency is not None:
        axes[2].imshow(saliency, cmap="viridis")
    axes[2].set_title("saliency")
    overlay = np.clip(image.copy(), 0, 1)
    roi_up = np.kron(np.asarray(roi), np.ones((4, 4), dtype=np.uint8))
    overlay[roi_up != 0] = 0.6 * overlay[roi_up != 0] + np.array([0.4, 0.0, 0.0])
    axes[3].imshow(overlay)
    axes[3].set_title("RoI overlay")
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    _save(fig, path)
