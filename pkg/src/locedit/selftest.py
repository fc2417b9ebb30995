"""Built-in invariant checks, runnable without a test framework."""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .attnreg import regularize_scores, reward_scores
from .fileio import load_tensor, save_tensor
from .localization import LabelMap, extract_roi, top_n_points
from .metrics import iou, l1, psnr, ssim
from .pipeline import blend_noise
from .rng import Prng
from .sampler import cfg_combine
from .tensorops import softmax_lastdim
from .text import TokenClass, tokenize


def _check_prng() -> None:
    a = [Prng(7).next_gaussian() for _ in range(100)]
    b = [Prng(7).next_gaussian() for _ in range(100)]
    assert a == b, "same seed must give the same stream"
    assert Prng(0).next_u64() == 0xE220A8397B1DCDAF, "SplitMix64 reference vector"


def _check_softmax() -> None:
    rng = np.random.RandomState(11)
    x = rng.uniform(-50, 50, size=(64, 77)).astype(np.float32)
    sums = softmax_lastdim(x).sum(axis=-1)
    assert np.allclose(sums, 1.0, atol=1e-6), "softmax rows must sum to 1"


def _check_cfg() -> None:
    rng = np.random.RandomState(5)
    e = [rng.randn(4, 4, 4).astype(np.float32) for _ in range(3)]
    assert np.array_equal(cfg_combine(*e, 1.0, 1.0), e[2])
    assert np.array_equal(cfg_combine(*e, 1.0, 0.0), e[1])


def _check_masked_softmax() -> None:
    rng = np.random.RandomState(3)
    scores = rng.uniform(-5, 5, size=(16, 10)).astype(np.float32)
    mask = (rng.rand(16) < 0.5).astype(np.uint8)
    unrelated = (0, 1, 2, 3)
    p = softmax_lastdim(regularize_scores(scores, mask, unrelated))
    masked_mass = p[mask == 1][:, list(unrelated)].sum()
    assert masked_mass <= 1e-7, "unrelated mass must vanish inside the mask"
    p2 = softmax_lastdim(reward_scores(scores, mask, (4, 5)))
    inside = p2[mask == 1][:, [4, 5]]
    assert np.allclose(inside, 0.5, atol=1e-12), "rewarded tokens must split evenly"


def _check_roi() -> None:
    rng = np.random.RandomState(9)
    labels = rng.randint(0, 6, size=(256, 256)).astype(np.int32)
    seg = LabelMap(labels=labels, k=6)
    pts = [(int(r), int(c)) for r, c in rng.randint(0, 64, size=(12, 2))]
    mask = extract_roi(seg, pts)
    assert all(mask[r, c] == 1 for r, c in pts), "points must land inside the RoI"
    bigger = extract_roi(seg, pts + [(0, 0)])
    assert (bigger >= mask).all(), "more points can only grow the RoI"


def _check_blend() -> None:
    rng = np.random.RandomState(2)
    a = rng.randn(64, 64, 4).astype(np.float32)
    b = rng.randn(64, 64, 4).astype(np.float32)
    ones = np.ones((64, 64), np.uint8)
    assert np.array_equal(blend_noise(a, b, ones), a)
    assert np.array_equal(blend_noise(a, b, ones * 0), b)


def _check_metrics() -> None:
    img = np.random.RandomState(4).rand(16, 16, 3).astype(np.float32)
    assert l1(img, img) == 0.0
    assert ssim(img, img) == 1.0
    assert psnr(img, img) == 99.0
    m = np.zeros((8, 8), np.uint8)
    assert iou(m, m) == 1.0


def _check_tensor_io() -> None:
    t = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "t.lten"
        save_tensor(t, path)
        assert np.array_equal(load_tensor(path), t)


def _check_tokens() -> None:
    seq = tokenize("make her outfit black")
    got = [c for c in seq.classes[:6]]
    want = [TokenClass.SOT, TokenClass.STOP, TokenClass.STOP,
            TokenClass.RELATED, TokenClass.RELATED, TokenClass.EOT]
    assert got == want, f"token classes {got}"


def _check_saliency_points() -> None:
    s = np.zeros((64, 64), np.float32)
    s[5, 7] = 1.0
    assert top_n_points(s, 1) == [(5, 7)]


CHECKS = [
    ("prng determinism", _check_prng),
    ("softmax row sums", _check_softmax),
    ("guidance identities", _check_cfg),
    ("masked softmax", _check_masked_softmax),
    ("roi properties", _check_roi),
    ("noise blend identities", _check_blend),
    ("metric identities", _check_metrics),
    ("tensor dump roundtrip", _check_tensor_io),
    ("token classes", _check_tokens),
    ("saliency argmax", _check_saliency_points),
]


def run() -> int:
    failed = 0
    for name, check in CHECKS:
        try:
            check()
            print(f"ok   {name}")
        except Exception as exc:  # noqa: BLE001
            failed += 1
            print(f"FAIL {name}: {exc}")
    if failed:
        print(f"{failed}/{len(CHECKS)} checks failed")
        return 2
    print(f"all {len(CHECKS)} checks passed")
    return 0
