"""Score-space cross-attention regularization.

Inside the edit region, pre-softmax attention scores of unrelated tokens
are pushed to -LARGE so the subsequent softmax assigns them exactly zero
probability and related tokens absorb the mass. The dual variant instead
pushes related-token scores to +LARGE, which splits the in-region mass
uniformly among them (in float32 the original scores are absorbed by the
sentinel, so all rewarded tokens tie exactly). Sentinels are finite: with
max-subtracted softmax, exp(-LARGE) underflows to exactly 0 in float32
while every tensor stays NaN/Inf-free.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .tensorops import FP

LARGE = np.float32(1e9)


def _check(scores: np.ndarray, mask_flat: np.ndarray) -> np.ndarray:
    if scores.ndim != 2:
        raise ValueError("scores must be n x D")
    mask_flat = np.asarray(mask_flat).reshape(-1)
    if mask_flat.shape[0] != scores.shape[0]:
        raise ValueError("mask length must match the score rows")
    return mask_flat != 0


def regularize_scores(
    scores: np.ndarray, mask_flat: np.ndarray, unrelated: Sequence[int]
) -> np.ndarray:
    """Set scores of unrelated tokens to -LARGE at masked positions.

    Rows with mask 0 are returned bit-identical; at least one token must
    stay unregularized so the softmax has somewhere to put the mass.
    """
    inside = _check(scores, mask_flat)
    unrelated = sorted(set(int(t) for t in unrelated))
    if len(unrelated) >= scores.shape[1]:
        raise ValueError("no related tokens to receive mass")
    out = np.array(scores, dtype=FP, copy=True)
    if unrelated and inside.any():
        out[np.ix_(inside, unrelated)] = -LARGE
    return out


def reward_scores(
    scores: np.ndarray, mask_flat: np.ndarray, related: Sequence[int]
) -> np.ndarray:
    """Set related-token scores to +LARGE at masked positions.

    The sentinel dominates any realistic score, so inside the region the
    softmax mass splits exactly uniformly over the rewarded tokens.
    """
    inside = _check(scores, mask_flat)
    related = sorted(set(int(t) for t in related))
    if not related:
        raise ValueError("empty related token set")
    out = np.array(scores, dtype=FP, copy=True)
    if inside.any():
        out[np.ix_(inside, related)] = LARGE
    return out
