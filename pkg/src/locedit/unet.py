"""Toy bi-conditional U-Net denoiser with instrumented cross-attention.

The network predicts noise for a 64 x 64 x 4 latent conditioned on an
image latent (channel-concatenated, zeros when absent) and a text
embedding (cross-attention keys/values; a learned null-text row stands in
when no instruction is given, so the image-only branch still exercises
every cross-attention layer).

Layout (all convs 3x3, no biases, SiLU nonlinearity, additive skips):

    stem   conv 8->16            @64
    down1  pool2, conv 16->32    @32   self-attn + cross-attn
    down2  pool2, conv 32->64    @16   self-attn + cross-attn
    mid    conv 64->64           @16   self-attn + cross-attn
    up1    up2,  conv 64->32     @32   +skip(down1)  self + cross
    up2    up2,  conv 32->16     @64   +skip(stem)   self + cross
    out    conv 16->4            @64

Weights are fully determined by one 64-bit seed: a single PRNG stream
fills every matrix in the order stem, down1, down2, mid, up1, up2, out,
null-text row; within an attention block the order is conv, time
projection, self Wq/Wk/Wv/Wo, cross Wq/Wk/Wv/Wo. Each matrix holds
standard normals scaled by 1/sqrt(fan_in); conv kernels are stored as
(3*3*in_ch, out_ch) with (dy, dx, channel) row order matching im2col.

Hooks: block outputs (the intermediate features used for segmentation)
are recorded only when record_features is set, cross-attention probability
maps only when record_attn is set; the sampler raises these flags per
branch and capture window. Score regularization runs inside cross-attention
only, and only when a text embedding is present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .attnreg import regularize_scores, reward_scores
from .rng import Prng
from .tensorops import FP, as_f32, avg_pool, bilinear_resize, ensure_finite, max_pool_grid
from .text import EMBED_DIM

LATENT_RES = 64
LATENT_CH = 4
TEMB_DIM = 32

BLOCK_IDS = ("down1", "down2", "mid", "up1", "up2")
BLOCK_RES = {"down1": 32, "down2": 16, "mid": 16, "up1": 32, "up2": 64}
BLOCK_CH = {"down1": 32, "down2": 64, "mid": 64, "up1": 32, "up2": 16}
ATTN_RESOLUTIONS = (64, 32, 16)

DIRECTIVE_MODES = ("none", "regularize_unrelated", "reward_related")


@dataclass
class HookRecord:
    """Per-step captures: block features and cross-attention maps."""

    features: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)
    attn: dict[tuple[int, str], np.ndarray] = field(default_factory=dict)

    def merge(self, other: "HookRecord") -> None:
        self.features.update(other.features)
        self.attn.update(other.attn)

    def feature_steps(self, block: str) -> list[int]:
        return sorted(s for (s, b) in self.features if b == block)

    def attn_steps(self, layer: str) -> list[int]:
        return sorted(s for (s, b) in self.attn if b == layer)


@dataclass(frozen=True)
class AttnDirective:
    """Score-transform request applied inside cross-attention layers."""

    mode: str
    mask64: np.ndarray | None = None
    tokens: tuple[int, ...] = ()

    def __post_init__(self):
        if self.mode not in DIRECTIVE_MODES:
            raise ValueError(f"unknown directive mode {self.mode!r}")
        if self.mode != "none":
            if self.mask64 is None or self.mask64.shape != (LATENT_RES, LATENT_RES):
                raise ValueError("directive needs a 64x64 mask")
            if not np.isin(self.mask64, (0, 1)).all():
                raise ValueError("directive mask must be binary")
            if not self.tokens:
                raise ValueError("directive needs a token index set")
            masks = {}
            m = np.asarray(self.mask64, dtype=np.uint8)
            for res in ATTN_RESOLUTIONS:
                masks[res] = max_pool_grid(m, LATENT_RES // res).reshape(-1)
            object.__setattr__(self, "_masks", masks)

    def mask_flat(self, res: int) -> np.ndarray:
        return self._masks[res]

    def apply(self, scores: np.ndarray, res: int) -> np.ndarray:
        if self.mode == "regularize_unrelated":
            return regularize_scores(scores, self.mask_flat(res), self.tokens)
        if self.mode == "reward_related":
            return reward_scores(scores, self.mask_flat(res), self.tokens)
        return scores


NO_DIRECTIVE = AttnDirective(mode="none")


def _draw(prng: Prng, rows: int, cols: int) -> np.ndarray:
    return prng.fill_gaussian((rows, cols)) * np.float32(1.0 / math.sqrt(rows))


@dataclass(frozen=True)
class AttnWeights:
    self_q: np.ndarray
    self_k: np.ndarray
    self_v: np.ndarray
    self_o: np.ndarray
    cross_q: np.ndarray
    cross_k: np.ndarray
    cross_v: np.ndarray
    cross_o: np.ndarray


@dataclass(frozen=True)
class BlockWeights:
    conv: np.ndarray
    time: np.ndarray
    attn: AttnWeights


@dataclass(frozen=True)
class DenoiserWeights:
    seed: int
    stem: np.ndarray
    blocks: dict[str, BlockWeights]
    out: np.ndarray
    null_text: np.ndarray

    def zeroed(self) -> "DenoiserWeights":
        """Same structure with every matrix zero; the net outputs exact 0."""

        def z(a):
            return np.zeros_like(a)

        blocks = {
            name: BlockWeights(
                conv=z(bw.conv),
                time=z(bw.time),
                attn=AttnWeights(**{k: z(getattr(bw.attn, k)) for k in AttnWeights.__dataclass_fields__}),
            )
            for name, bw in self.blocks.items()
        }
        return DenoiserWeights(self.seed, z(self.stem), blocks, z(self.out), z(self.null_text))


def init_weights(seed: int) -> DenoiserWeights:
    """Fill every matrix from one seeded stream in the documented order."""
    prng = Prng(seed)
    stem = _draw(prng, 9 * (2 * LATENT_CH), 16)
    blocks: dict[str, BlockWeights] = {}
    in_ch = {"down1": 16, "down2": 32, "mid": 64, "up1": 64, "up2": 32}
    for name in BLOCK_IDS:
        d = BLOCK_CH[name]
        conv = _draw(prng, 9 * in_ch[name], d)
        time = _draw(prng, TEMB_DIM, d)
        attn = AttnWeights(
            self_q=_draw(prng, d, d),
            self_k=_draw(prng, d, d),
            self_v=_draw(prng, d, d),
            self_o=_draw(prng, d, d),
            cross_q=_draw(prng, d, d),
            cross_k=_draw(prng, EMBED_DIM, d),
            cross_v=_draw(prng, EMBED_DIM, d),
            cross_o=_draw(prng, d, d),
        )
        blocks[name] = BlockWeights(conv=conv, time=time, attn=attn)
    out = _draw(prng, 9 * 16, LATENT_CH)
    null_text = prng.fill_gaussian((1, EMBED_DIM))
    return DenoiserWeights(seed, stem, blocks, out, null_text)


def time_embedding(step: int) -> np.ndarray:
    half = TEMB_DIM // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half, dtype=np.float64) / half)
    angles = step * freqs
    return as_f32(np.concatenate([np.sin(angles), np.cos(angles)]))


def silu(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows float32
    pos = x >= 0
    e = np.exp(np.where(pos, -x, x))
    one = np.float32(1.0)
    return np.where(pos, x / (one + e), x * e / (one + e))


def conv3x3(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Same-padded 3x3 convolution via im2col; w is (9*c_in, c_out)."""
    h, width, c = x.shape
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    cols = np.empty((h, width, 9 * c), dtype=FP)
    k = 0
    for dy in range(3):
        for dx in range(3):
            cols[:, :, k * c : (k + 1) * c] = xp[dy : dy + h, dx : dx + width, :]
            k += 1
    return (cols.reshape(h * width, 9 * c) @ w).reshape(h, width, -1)


def attention(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, scores_hook=None
) -> tuple[np.ndarray, np.ndarray]:
    """Scaled dot-product attention; returns (output, probability map P).

    scores = Q K^T / sqrt(d), optionally transformed by scores_hook before
    the row softmax; P rows sum to 1 and out = P V.
    """
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ValueError("attention expects 2-D Q, K, V")
    if q.shape[1] != k.shape[1] or k.shape[0] != v.shape[0]:
        raise ValueError(f"attention shape mismatch: {q.shape}, {k.shape}, {v.shape}")
    d = q.shape[1]
    if d < 1:
        raise ValueError("attention needs d >= 1")
    scores = (q @ k.T) * np.float32(1.0 / math.sqrt(d))
    if scores_hook is not None:
        scores = scores_hook(scores)
    scores -= scores.max(axis=1, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=1, keepdims=True)
    return scores @ v, scores


_SELF_ATTN_BLOCK = 512


def _self_attention_out(q: np.ndarray, k: np.ndarray, v: np.ndarray) -> np.ndarray:
    """attention() output without materializing P; row-blocked for cache.

    Row-wise arithmetic is identical to attention(); only the discarded
    probability map is skipped, which matters at the 64 x 64 grid where P
    would be 4096 x 4096.
    """
    n, d = q.shape
    scale = np.float32(1.0 / math.sqrt(d))
    kt = np.ascontiguousarray(k.T)
    out = np.empty((n, v.shape[1]), dtype=FP)
    for lo in range(0, n, _SELF_ATTN_BLOCK):
        hi = min(lo + _SELF_ATTN_BLOCK, n)
        s = (q[lo:hi] @ kt) * scale
        s -= s.max(axis=1, keepdims=True)
        np.exp(s, out=s)
        s /= s.sum(axis=1, keepdims=True)
        out[lo:hi] = s @ v
    return out


def _upsample2(x: np.ndarray) -> np.ndarray:
    h, w, _ = x.shape
    return bilinear_resize(x, 2 * h, 2 * w)


def forward(
    weights: DenoiserWeights,
    z_t: np.ndarray,
    step: int,
    c_img: np.ndarray | None,
    c_txt: np.ndarray | None,
    directive: AttnDirective = NO_DIRECTIVE,
    record_features: bool = False,
    record_attn: bool = False,
) -> tuple[np.ndarray, HookRecord]:
    """One denoiser evaluation; returns predicted noise and hook deltas."""
    if z_t.shape != (LATENT_RES, LATENT_RES, LATENT_CH):
        raise ValueError(f"latent must be {LATENT_RES}x{LATENT_RES}x{LATENT_CH}")
    zeros = np.zeros_like(z_t)
    x = np.concatenate([as_f32(z_t), as_f32(c_img) if c_img is not None else zeros], axis=2)

    temb = time_embedding(step)
    txt = as_f32(c_txt) if c_txt is not None else weights.null_text
    apply_directive = c_txt is not None and directive.mode != "none"

    hooks = HookRecord()
    x = conv3x3(x, weights.stem)
    stem_out = x

    skips = {"up1": None, "up2": stem_out}

    for name in BLOCK_IDS:
        bw = weights.blocks[name]
        res = BLOCK_RES[name]
        if name in ("down1", "down2"):
            x = avg_pool(x, 2)
        elif name in ("up1", "up2"):
            x = _upsample2(x)
        x = conv3x3(x, bw.conv)
        if name == "up1":
            x = x + skips["up1"]
        elif name == "up2":
            x = x + skips["up2"]
        x = x + (temb @ bw.time)[None, None, :]
        x = silu(x)

        d = BLOCK_CH[name]
        flat = x.reshape(res * res, d)

        # self-attention (never regularized), residual
        out = _self_attention_out(flat @ bw.attn.self_q, flat @ bw.attn.self_k, flat @ bw.attn.self_v)
        flat = flat + out @ bw.attn.self_o

        # cross-attention against the text (or null) embedding, residual
        hook = (lambda s, r=res: directive.apply(s, r)) if apply_directive else None
        out, p = attention(flat @ bw.attn.cross_q, txt @ bw.attn.cross_k, txt @ bw.attn.cross_v, hook)
        flat = flat + out @ bw.attn.cross_o

        x = flat.reshape(res, res, d)
        if name == "down1":
            skips["up1"] = x
        if record_features:
            hooks.features[(step, name)] = x.copy()
        if record_attn and c_txt is not None:
            hooks.attn[(step, name)] = p.reshape(res, res, -1).copy()

    noise = conv3x3(x, weights.out)
    ensure_finite("denoiser output", noise)
    return noise, hooks
