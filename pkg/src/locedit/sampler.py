"""Latent codec, noise schedule, guidance combination, and the sample loop.

The latent codec is a fixed down/upsampling pair: images enter as 4x4
channel means (fourth latent channel zero) and leave as a bilinear
upsample clamped to [0,1]. The schedule is linear in sigma with endpoints
exactly 1.0 and 0.0; denoising is a plain Euler walk along it.

Per step the three guidance branches are evaluated - unconditional,
image-only, image+text - and combined with the two guidance scales. Step
numbering for capture windows is the 1-based order of execution: "steps
30-50" means the 30th through 50th executed iterations. Intermediate
features are hooked on the image-only branch; cross-attention maps on the
image+text branch; a score directive is forwarded only to the image+text
branch and only on steps inside the regularization window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import Prng
from .tensorops import FP, as_f32, avg_pool, bilinear_resize, ensure_finite
from .unet import (
    LATENT_CH,
    LATENT_RES,
    NO_DIRECTIVE,
    AttnDirective,
    DenoiserWeights,
    HookRecord,
    forward,
)

IMAGE_RES = 256
POOL = IMAGE_RES // LATENT_RES


@dataclass(frozen=True)
class Schedule:
    total_steps: int
    sigmas: np.ndarray  # index s in [0, total_steps], sigma_s = s / total_steps

    @classmethod
    def linear(cls, total_steps: int) -> "Schedule":
        if total_steps < 2:
            raise ValueError("total_steps must be >= 2")
        sigmas = np.linspace(0.0, 1.0, total_steps + 1, dtype=np.float64).astype(FP)
        return cls(total_steps, sigmas)


def encode_latent(image: np.ndarray) -> np.ndarray:
    """256 x 256 x 3 image -> 64 x 64 x 4 latent (4x4 means, zero channel)."""
    if image.shape != (IMAGE_RES, IMAGE_RES, 3):
        raise ValueError(f"image must be {IMAGE_RES}x{IMAGE_RES}x3")
    pooled = avg_pool(as_f32(image), POOL)
    z = np.zeros((LATENT_RES, LATENT_RES, LATENT_CH), dtype=FP)
    z[:, :, :3] = pooled
    return z


def decode_latent(z: np.ndarray) -> np.ndarray:
    """64 x 64 x 4 latent -> 256 x 256 x 3 image, clamped to [0,1]."""
    if z.shape != (LATENT_RES, LATENT_RES, LATENT_CH):
        raise ValueError(f"latent must be {LATENT_RES}x{LATENT_RES}x{LATENT_CH}")
    up = bilinear_resize(as_f32(z)[:, :, :3], IMAGE_RES, IMAGE_RES)
    return np.clip(up, 0.0, 1.0)


def cfg_combine(
    e_uu: np.ndarray, e_iu: np.ndarray, e_it: np.ndarray, s_img: float, s_txt: float
) -> np.ndarray:
    """e_uu + s_img*(e_iu - e_uu) + s_txt*(e_it - e_iu), elementwise.

    The scale pairs (1,1) and (1,0) collapse to a single branch exactly, so
    those identities are returned bitwise rather than telescoped in floats.
    """
    if not (e_uu.shape == e_iu.shape == e_it.shape):
        raise ValueError("guidance branches must share a shape")
    if s_img == 1.0 and s_txt == 1.0:
        return e_it.copy()
    if s_img == 1.0 and s_txt == 0.0:
        return e_iu.copy()
    s_i, s_t = np.float32(s_img), np.float32(s_txt)
    return e_uu + s_i * (e_iu - e_uu) + s_t * (e_it - e_iu)


@dataclass
class CaptureWindows:
    feature_lo: int = 0
    feature_hi: int = -1  # empty window by default
    attn_lo: int = 0
    attn_hi: int = -1

    def features_at(self, step: int) -> bool:
        return self.feature_lo <= step <= self.feature_hi

    def attn_at(self, step: int) -> bool:
        return self.attn_lo <= step <= self.attn_hi


@dataclass
class SampleRun:
    z0: np.ndarray
    hooks: HookRecord
    config: dict


def predict_noise(
    weights: DenoiserWeights,
    z: np.ndarray,
    step: int,
    c_img: np.ndarray,
    c_txt: np.ndarray | None,
    s_img: float,
    s_txt: float,
    directive: AttnDirective = NO_DIRECTIVE,
    windows: CaptureWindows | None = None,
    hooks: HookRecord | None = None,
) -> np.ndarray:
    """Evaluate the guidance branches at one step and combine them.

    With no text embedding the text term is dropped (s_txt is forced to 0),
    which is the instruction-free reconstruction predictor.
    """
    want_feat = windows is not None and windows.features_at(step)
    want_attn = windows is not None and windows.attn_at(step) and c_txt is not None

    e_uu, _ = forward(weights, z, step, None, None)
    e_iu, delta = forward(weights, z, step, c_img, None, record_features=want_feat)
    if hooks is not None:
        hooks.merge(delta)
    if c_txt is not None:
        e_it, delta = forward(
            weights, z, step, c_img, c_txt, directive=directive, record_attn=want_attn
        )
        if hooks is not None:
            hooks.merge(delta)
    else:
        e_it, s_txt = e_iu, 0.0
    return cfg_combine(e_uu, e_iu, e_it, s_img, s_txt)


def initial_latent(image: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Encoded image latent and its noised counterpart at sigma = 1."""
    c_img = encode_latent(image)
    eps = Prng(seed).fill_gaussian((LATENT_RES, LATENT_RES, LATENT_CH))
    return c_img, c_img + eps


def sample(
    image: np.ndarray,
    c_txt: np.ndarray | None,
    weights: DenoiserWeights,
    total_steps: int,
    seed: int,
    s_img: float,
    s_txt: float,
    directive: AttnDirective = NO_DIRECTIVE,
    reg_window: tuple[int, int] = (0, -1),
    windows: CaptureWindows | None = None,
) -> SampleRun:
    """Run the full denoising loop from the noised image latent."""
    sched = Schedule.linear(total_steps)
    c_img, z = initial_latent(image, seed)
    hooks = HookRecord()
    for step in range(1, total_steps + 1):
        s = total_steps + 1 - step  # schedule index walks T..1
        active = directive if reg_window[0] <= step <= reg_window[1] else NO_DIRECTIVE
        e_hat = predict_noise(
            weights, z, step, c_img, c_txt, s_img, s_txt, active, windows, hooks
        )
        z = z + (sched.sigmas[s - 1] - sched.sigmas[s]) * e_hat
    ensure_finite("sampled latent", z)
    cfg = {
        "total_steps": total_steps,
        "seed": seed,
        "s_img": s_img,
        "s_txt": s_txt,
        "directive": directive.mode,
    }
    return SampleRun(z0=z, hooks=hooks, config=cfg)
