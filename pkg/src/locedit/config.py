"""Edit pipeline configuration: defaults, validation, file round-trip.

Config files are flat UTF-8 ``key = value`` lines with ``#`` comments.
Precedence, lowest to highest: built-in defaults, the LIME_SEED
environment variable (seed only), config file, explicit overrides
(command-line flags). parse/serialize round-trips exactly; unknown keys
are rejected by name.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

CLUSTERING_MODES = ("kmeans", "agglomerative")
EDIT_MODES = ("attention_reg", "token_reward", "noise_blend", "none")

ENV_SEED = "LIME_SEED"


@dataclass(frozen=True)
class EditConfig:
    seed: int = 0
    total_steps: int = 100
    feature_lo: int = 30
    feature_hi: int = 50
    attn_lo: int = 1
    attn_hi: int = 75
    reg_lo: int = 1
    reg_hi: int = 75
    k_clusters: int = 8
    n_points: int = 100
    s_img_loc: float = 1.5
    s_txt_loc: float = 7.5
    s_img_edit: float = 1.5
    s_txt_edit: float = 3.5
    clustering: str = "kmeans"
    agglo_threshold: float = 0.5
    edit_mode: str = "attention_reg"
    external_mask: str = ""

    def validate(self) -> "EditConfig":
        if self.total_steps < 2:
            raise ValueError("total_steps must be >= 2")
        for name in ("feature", "attn", "reg"):
            lo = getattr(self, f"{name}_lo")
            hi = getattr(self, f"{name}_hi")
            if not (1 <= lo <= hi <= self.total_steps):
                raise ValueError(
                    f"{name}_lo/{name}_hi must satisfy 1 <= lo <= hi <= total_steps"
                )
        if self.k_clusters < 1:
            raise ValueError("k_clusters must be positive")
        if not 1 <= self.n_points <= 64 * 64:
            raise ValueError("n_points must be in [1, 4096]")
        for name in ("s_img_loc", "s_txt_loc", "s_img_edit", "s_txt_edit"):
            v = getattr(self, name)
            if not (v == v and abs(v) != float("inf")):
                raise ValueError(f"{name} must be finite")
        if self.clustering not in CLUSTERING_MODES:
            raise ValueError(f"clustering must be one of {CLUSTERING_MODES}")
        if not 0.0 < self.agglo_threshold < 1.0:
            raise ValueError("agglo_threshold must lie in (0, 1)")
        if self.edit_mode not in EDIT_MODES:
            raise ValueError(f"edit_mode must be one of {EDIT_MODES}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        return self

    def scaled_to(self, total_steps: int) -> "EditConfig":
        """Rescale capture/regularization windows onto a new step count.

        Window endpoints move proportionally (rounding to the nearest step,
        clamped to [1, total_steps]) so shorter runs keep the same relative
        schedule coverage.
        """
        ratio = total_steps / self.total_steps

        def remap(v: int) -> int:
            return min(max(1, round(v * ratio)), total_steps)

        return replace(
            self,
            total_steps=total_steps,
            feature_lo=remap(self.feature_lo),
            feature_hi=remap(self.feature_hi),
            attn_lo=remap(self.attn_lo),
            attn_hi=remap(self.attn_hi),
            reg_lo=remap(self.reg_lo),
            reg_hi=remap(self.reg_hi),
        ).validate()


_FIELDS = {f.name: f.type for f in fields(EditConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELDS[key]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ValueError(f"bad value for {key}: {raw!r}") from exc


def parse_config(
    path: str | Path | None = None,
    overrides: dict[str, object] | None = None,
    env: dict[str, str] | None = None,
) -> EditConfig:
    """Resolve a config from defaults, environment, file, and overrides."""
    env = os.environ if env is None else env
    values: dict[str, object] = {}
    if ENV_SEED in env:
        try:
            values["seed"] = int(env[ENV_SEED])
        except ValueError as exc:
            raise ValueError(f"bad value for {ENV_SEED}: {env[ENV_SEED]!r}") from exc
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _FIELDS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _parse_value(key, raw)
    for key, value in (overrides or {}).items():
        if key not in _FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        values[key] = _parse_value(key, str(value)) if isinstance(value, str) else value
    return EditConfig(**values).validate()


def serialize_config(cfg: EditConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg, f.name)}" for f in fields(EditConfig)]
    return "\n".join(lines) + "\n"
