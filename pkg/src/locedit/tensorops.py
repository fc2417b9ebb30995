"""Dense float32 tensor primitives: resampling, softmax, matmul, pooling.

All functions are pure and deterministic: same inputs produce bitwise-same
outputs. Arrays are C-contiguous float32 unless stated otherwise (label
grids are integer). Bilinear sampling maps destination pixel centers with
x_src = (x_dst + 0.5) * scale - 0.5, clamped to the source grid.
"""

from __future__ import annotations

import numpy as np

FP = np.float32


def as_f32(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=FP)


def ensure_finite(name: str, a: np.ndarray) -> np.ndarray:
    if not np.isfinite(a).all():
        raise FloatingPointError(f"non-finite values in {name}")
    return a


def _axis_coords(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source indices and blend weights for one bilinear axis."""
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = (src - lo).astype(FP)
    return lo, hi, frac


def bilinear_resize(t: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize an H x W x C (or H x W) tensor with bilinear interpolation."""
    squeeze = t.ndim == 2
    if squeeze:
        t = t[:, :, None]
    if t.ndim != 3:
        raise ValueError("bilinear_resize expects an H x W x C tensor")
    h, w, _ = t.shape
    if h < 1 or w < 1 or out_h < 1 or out_w < 1:
        raise ValueError("empty tensor")
    t = as_f32(t)
    if (out_h, out_w) == (h, w):
        out = t.copy()
        return out[:, :, 0] if squeeze else out

    ylo, yhi, fy = _axis_coords(out_h, h)
    xlo, xhi, fx = _axis_coords(out_w, w)
    # lerp form v0 + f*(v1 - v0) keeps constant fields exact fixed points
    fx3 = fx[None, :, None]
    top = t[ylo][:, xlo]
    top += (t[ylo][:, xhi] - top) * fx3
    bot = t[yhi][:, xlo]
    bot += (t[yhi][:, xhi] - bot) * fx3
    out = top + (bot - top) * fy[:, None, None]
    out = as_f32(out)
    return out[:, :, 0] if squeeze else out


def nearest_resize(t: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize of a 2-D grid; values are copied, never mixed."""
    if t.ndim != 2:
        raise ValueError("nearest_resize expects a 2-D grid")
    h, w = t.shape
    if h < 1 or w < 1 or out_h < 1 or out_w < 1:
        raise ValueError("empty tensor")
    if (out_h, out_w) == (h, w):
        return t.copy()
    rows = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), h - 1)
    cols = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), w - 1)
    return t[rows][:, cols].copy()


def softmax_lastdim(t: np.ndarray) -> np.ndarray:
    """Softmax over the last axis with max-subtraction for stability."""
    t = np.asarray(t, dtype=FP)
    shifted = t - t.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul dim mismatch: {a.shape} x {b.shape}")
    return np.matmul(as_f32(a), as_f32(b))


def standardize_channels(t: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Zero-mean, unit-variance per channel over the spatial grid.

    Channels whose population std falls below eps are mapped to all zeros
    (constant feature channels carry no clustering signal).
    """
    if t.ndim != 3:
        raise ValueError("standardize_channels expects H x W x C")
    h, w, _ = t.shape
    if h * w < 2:
        raise ValueError("need at least two spatial samples")
    t = as_f32(t)
    mean = t.mean(axis=(0, 1), dtype=np.float64)
    std = t.std(axis=(0, 1), dtype=np.float64)
    out = np.where(std < eps, 0.0, (t - mean.astype(FP)) / np.maximum(std, eps).astype(FP))
    return as_f32(out)


def avg_pool(t: np.ndarray, factor: int) -> np.ndarray:
    """Mean over non-overlapping factor x factor blocks of H x W x C."""
    h, w, c = t.shape
    if h % factor or w % factor:
        raise ValueError("pool factor must divide spatial dims")
    t = as_f32(t)
    blocks = t.reshape(h // factor, factor, w // factor, factor, c)
    return as_f32(blocks.mean(axis=(1, 3), dtype=np.float64))


def max_pool_grid(m: np.ndarray, factor: int) -> np.ndarray:
    """Max over non-overlapping factor x factor blocks of a 2-D grid."""
    h, w = m.shape
    if h % factor or w % factor:
        raise ValueError("pool factor must divide grid dims")
    return m.reshape(h // factor, factor, w // factor, factor).max(axis=(1, 3))
