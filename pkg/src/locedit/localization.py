"""Edit localization: feature fusion, clustering, saliency, RoI extraction.

Hooked block features are fused across resolutions (resize each map to a
common grid, standardize per channel, average the capture window per
block, concatenate blocks along channels) and clustered into segments.
Hooked cross-attention maps are resized to the 64 x 64 latent grid,
averaged, L1-normalized along the token axis, and reduced to a saliency
map by averaging the related-token columns. The RoI is the union of every
segment that covers at least one of the top-N saliency points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import Prng
from .tensorops import (
    as_f32,
    bilinear_resize,
    ensure_finite,
    max_pool_grid,
    nearest_resize,
    standardize_channels,
)
from .unet import HookRecord

SEG_RES = 256
ATTN_RES = 64
NORM_EPS = 1e-12


@dataclass
class LabelMap:
    """Per-pixel cluster assignment; ids are dense in [0, k)."""

    labels: np.ndarray
    k: int
    inertia_history: list[float] = field(default_factory=list)


def fuse_features(hooks: HookRecord, target: int = SEG_RES) -> np.ndarray:
    """Multi-resolution fusion of hooked features to target x target x C."""
    if not hooks.features:
        raise ValueError("no features captured")
    blocks = sorted({b for (_, b) in hooks.features})
    parts = []
    for block in blocks:
        steps = hooks.feature_steps(block)
        acc = None
        for step in steps:
            fmap = hooks.features[(step, block)]
            resized = bilinear_resize(fmap, target, target)
            std = standardize_channels(resized)
            acc = std if acc is None else acc + std
        parts.append(acc / np.float32(len(steps)))
    fused = np.concatenate(parts, axis=2)
    return ensure_finite("fused features", fused)


def _renumber_first_occurrence(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Relabel so ids appear in row-major first-occurrence order."""
    flat = labels.reshape(-1)
    mapping: dict[int, int] = {}
    for v in flat:
        iv = int(v)
        if iv not in mapping:
            mapping[iv] = len(mapping)
    lut = np.zeros(max(mapping) + 1, dtype=np.int32)
    for old, new in mapping.items():
        lut[old] = new
    return lut[flat].reshape(labels.shape), len(mapping)


def _pairwise_sq_dists(
    points: np.ndarray, centers: np.ndarray, p2: np.ndarray | None = None
) -> np.ndarray:
    # |x - c|^2 via gemm; clamp tiny negatives from cancellation
    if p2 is None:
        p2 = (points * points).sum(axis=1)
    d2 = p2[:, None] + (centers * centers).sum(axis=1)[None, :] - 2.0 * points @ centers.T
    return np.maximum(d2, 0.0)


def kmeans(features: np.ndarray, k: int, seed: int, max_iter: int = 100) -> LabelMap:
    """Lloyd k-means with k-means++ seeding, squared-Euclidean metric.

    Ties assign to the lowest centroid index; empty clusters keep their
    previous centroid; iteration stops when assignments are stable. Labels
    are renumbered by first spatial occurrence so results are reproducible
    regardless of the seeding permutation.
    """
    if features.ndim != 3:
        raise ValueError("features must be H x W x C")
    h, w, c = features.shape
    n = h * w
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}]")
    points = as_f32(features).reshape(n, c).astype(np.float64)
    p2 = (points * points).sum(axis=1)

    prng = Prng(seed)
    centers = np.empty((k, c), dtype=np.float64)
    centers[0] = points[prng.next_index(n)]
    best_d2 = _pairwise_sq_dists(points, centers[:1], p2).ravel()
    for j in range(1, k):
        total = best_d2.sum()
        if total <= 0.0:
            idx = j % n  # all remaining mass identical; pick deterministically
        else:
            r = prng.next_f64() * total
            idx = int(np.searchsorted(np.cumsum(best_d2), r, side="right"))
            idx = min(idx, n - 1)
        centers[j] = points[idx]
        best_d2 = np.minimum(best_d2, _pairwise_sq_dists(points, centers[j : j + 1], p2).ravel())

    labels = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    for _ in range(max_iter):
        d2 = _pairwise_sq_dists(points, centers, p2)
        new_labels = d2.argmin(axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        onehot = (labels[None, :] == np.arange(k)[:, None]).astype(np.float64)
        counts = onehot.sum(axis=1)
        sums = onehot @ points
        occupied = counts > 0  # empty clusters keep their previous centroid
        centers[occupied] = sums[occupied] / counts[occupied, None]

    grid, found = _renumber_first_occurrence(labels.reshape(h, w))
    return LabelMap(labels=grid, k=max(found, k), inertia_history=history)


def agglomerative(features: np.ndarray, threshold: float) -> LabelMap:
    """Average-linkage clustering under cosine distance (1 - cosine sim).

    Clusters merge while the smallest inter-cluster distance stays at or
    below the threshold. Inter-cluster distance is the mean of all
    cross-pair distances, maintained with the Lance-Williams update.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    if features.ndim != 3:
        raise ValueError("features must be H x W x C")
    h, w, c = features.shape
    n = h * w
    points = as_f32(features).reshape(n, c).astype(np.float64)
    norms = np.sqrt((points * points).sum(axis=1))
    if (norms < 1e-12).any():
        raise ValueError("cosine undefined for zero feature vectors")
    unit = points / norms[:, None]
    dist = 1.0 - unit @ unit.T
    np.clip(dist, 0.0, 2.0, out=dist)
    np.fill_diagonal(dist, np.inf)

    active = np.ones(n, dtype=bool)
    sizes = np.ones(n, dtype=np.int64)
    parent = np.arange(n)
    row_min = dist.min(axis=1)
    row_arg = dist.argmin(axis=1)

    def refresh(i: int) -> None:
        row_min[i] = dist[i].min()
        row_arg[i] = dist[i].argmin()

    clusters = n
    while clusters > 1:
        masked = np.where(active, row_min, np.inf)
        i = int(masked.argmin())
        if masked[i] > threshold:
            break
        j = int(row_arg[i])
        if i > j:
            i, j = j, i
        # Lance-Williams average linkage: d(k, i+j) weighted by sizes
        ni, nj = sizes[i], sizes[j]
        merged = (ni * dist[i] + nj * dist[j]) / (ni + nj)
        dist[i, :] = merged
        dist[:, i] = merged
        dist[i, i] = np.inf
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        active[j] = False
        sizes[i] = ni + nj
        parent[parent == j] = i
        clusters -= 1
        refresh(i)
        stale = active & ((row_arg == j) | (row_arg == i))
        stale[i] = False
        better = active & (dist[:, i] < row_min)
        row_min[better] = dist[better, i]
        row_arg[better] = i
        for m in np.nonzero(stale & ~better)[0]:
            refresh(int(m))

    grid, found = _renumber_first_occurrence(parent.reshape(h, w))
    return LabelMap(labels=grid, k=found)


def aggregate_attention(hooks: HookRecord, related: tuple[int, ...]) -> np.ndarray:
    """Mean related-token attention per latent cell (64 x 64 saliency)."""
    if not related:
        raise ValueError("no related tokens")
    if not hooks.attn:
        raise ValueError("no attention maps captured")
    acc = None
    count = 0
    for key in sorted(hooks.attn):
        resized = bilinear_resize(hooks.attn[key], ATTN_RES, ATTN_RES)
        acc = resized if acc is None else acc + resized
        count += 1
    mean = acc / np.float32(count)
    denom = np.maximum(mean.sum(axis=2, keepdims=True), np.float32(NORM_EPS))
    normalized = mean / denom
    saliency = normalized[:, :, list(related)].mean(axis=2)
    return ensure_finite("saliency", as_f32(saliency))


def top_n_points(saliency: np.ndarray, n: int) -> list[tuple[int, int]]:
    """The n highest saliency cells, ties broken by row-major order."""
    if saliency.ndim != 2:
        raise ValueError("saliency must be 2-D")
    cells = saliency.size
    if not 1 <= n <= cells:
        raise ValueError(f"n must be in [1, {cells}]")
    flat = saliency.reshape(-1)
    order = np.argsort(-flat, kind="stable")[:n]
    width = saliency.shape[1]
    return [(int(i) // width, int(i) % width) for i in order]


def extract_roi(seg: LabelMap, points: list[tuple[int, int]]) -> np.ndarray:
    """Union of downsampled segments hit by at least one point (64 x 64)."""
    if not points:
        raise ValueError("no points given")
    seg64 = nearest_resize(seg.labels, ATTN_RES, ATTN_RES)
    hit = {int(seg64[r, c]) for (r, c) in points}
    mask = np.isin(seg64, sorted(hit)).astype(np.uint8)
    return mask


def mask_at_resolution(mask64: np.ndarray, res: int) -> np.ndarray:
    """Max-pool a 64 x 64 binary mask down to res x res (res in {64,32,16})."""
    if res not in (64, 32, 16):
        raise ValueError("resolution must be one of 64, 32, 16")
    if mask64.shape != (ATTN_RES, ATTN_RES):
        raise ValueError("mask must be 64 x 64")
    return max_pool_grid(np.asarray(mask64, dtype=np.uint8), ATTN_RES // res)
