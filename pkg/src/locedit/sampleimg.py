"""Synthetic test scenes: a figure with an outfit on a graded backdrop.

Everything is drawn analytically so regenerated assets are byte-stable.
"""

from __future__ import annotations

import numpy as np

from .tensorops import FP


def sample_image(variant: int = 0) -> np.ndarray:
    """256 x 256 x 3 scene in [0,1]: sky gradient, ground, figure, outfit."""
    size = 256
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    y = yy / (size - 1)
    x = xx / (size - 1)

    img = np.zeros((size, size, 3), dtype=np.float64)
    # sky gradient, hue nudged by variant
    img[:, :, 0] = 0.35 + 0.15 * y + 0.05 * ((variant * 37) % 11) / 11.0
    img[:, :, 1] = 0.55 + 0.20 * y
    img[:, :, 2] = 0.80 - 0.25 * y

    ground = y > 0.72
    img[ground] = [0.30, 0.45, 0.20]

    cx = 0.50 + 0.06 * (((variant * 17) % 5) - 2) / 2.0
    # head
    head = (x - cx) ** 2 + (y - 0.30) ** 2 < 0.055**2
    img[head] = [0.85, 0.70, 0.55]
    # outfit: a trapezoid torso plus skirt
    torso = (np.abs(x - cx) < 0.06 + 0.10 * (y - 0.36)) & (y > 0.36) & (y < 0.72)
    img[torso] = [0.75, 0.20, 0.25]
    # arms
    arms = (np.abs(np.abs(x - cx) - 0.13) < 0.025) & (y > 0.40) & (y < 0.58)
    img[arms] = [0.85, 0.70, 0.55]
    # a ball on the ground, opposite side
    bx = cx - 0.27 if variant % 2 == 0 else cx + 0.27
    ball = (x - bx) ** 2 + (y - 0.80) ** 2 < 0.06**2
    img[ball] = [0.95, 0.80, 0.10]

    return img.astype(FP)


def outfit_mask(variant: int = 0) -> np.ndarray:
    """64 x 64 binary mask covering the drawn outfit region."""
    size = 64
    yy, xx = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    y = yy / (size - 1)
    x = xx / (size - 1)
    cx = 0.50 + 0.06 * (((variant * 17) % 5) - 2) / 2.0
    torso = (np.abs(x - cx) < 0.06 + 0.10 * (y - 0.36)) & (y > 0.36) & (y < 0.72)
    return torso.astype(np.uint8)
