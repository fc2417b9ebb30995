"""Deterministic localized image editing on a toy latent diffusion stack.

The pipeline finds the region an instruction refers to by clustering
denoiser features and reading cross-attention saliency, then confines the
edit to that region by regularizing cross-attention scores (or blending
latents) during a second denoising pass.
"""

from .attnreg import LARGE, regularize_scores, reward_scores
from .config import EditConfig, parse_config, serialize_config
from .localization import (
    LabelMap,
    agglomerative,
    aggregate_attention,
    extract_roi,
    fuse_features,
    kmeans,
    mask_at_resolution,
    top_n_points,
)
from .metrics import iou, l1, mse, psnr, run_cases, ssim
from .pipeline import EditResult, blend_noise, run_pipeline
from .rng import Prng
from .sampler import Schedule, cfg_combine, decode_latent, encode_latent, sample
from .text import TokenClass, TokenSequence, classify_tokens, embed, tokenize
from .unet import AttnDirective, DenoiserWeights, HookRecord, attention, forward, init_weights

__version__ = "0.1.0"

__all__ = [
    "AttnDirective",
    "DenoiserWeights",
    "EditConfig",
    "EditResult",
    "HookRecord",
    "LARGE",
    "LabelMap",
    "Prng",
    "Schedule",
    "TokenClass",
    "TokenSequence",
    "agglomerative",
    "aggregate_attention",
    "attention",
    "blend_noise",
    "cfg_combine",
    "classify_tokens",
    "decode_latent",
    "embed",
    "encode_latent",
    "extract_roi",
    "forward",
    "fuse_features",
    "init_weights",
    "iou",
    "kmeans",
    "l1",
    "mask_at_resolution",
    "mse",
    "parse_config",
    "psnr",
    "regularize_scores",
    "reward_scores",
    "run_cases",
    "run_pipeline",
    "sample",
    "serialize_config",
    "ssim",
    "tokenize",
    "top_n_points",
]
