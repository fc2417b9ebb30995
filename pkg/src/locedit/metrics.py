"""Pixel-space metrics and the case-directory evaluation harness.

Images are float32 in [0,1]. SSIM is single-scale over non-overlapping
8x8 windows with the usual stability constants C1=(0.01)^2, C2=(0.03)^2,
averaged over channels and windows. PSNR is capped at 99 dB once the MSE
drops below 1e-10 so reports never carry infinities.

A case directory holds one subdirectory per case with ``input.png`` and
``instruction.txt``, plus optional ``mask.pgm`` (reference mask, scored
with IoU against the produced RoI) and ``expected.png`` (reference edit,
scored with l1/mse/psnr/ssim). The harness writes ``report.tsv`` (one
line per case plus an aggregate-mean line) and a companion ``report.png``
chart; malformed cases are recorded and skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import EditConfig
from .fileio import atomic_write_text, load_mask_pgm, load_png
from .pipeline import run_pipeline, upsample_mask
from .tensorops import as_f32, max_pool_grid

PSNR_CAP = 99.0
PSNR_MSE_FLOOR = 1e-10

REPORT_HEADER = ("case", "l1", "mse", "psnr", "ssim", "iou", "bg_l1")


def _check_pair(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_f32(a), as_f32(b)
    if a.shape != b.shape:
        raise ValueError(f"image shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def l1(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check_pair(a, b)
    return float(np.abs(a - b).mean(dtype=np.float64))


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = _check_pair(a, b)
    d = (a - b).astype(np.float64)
    return float((d * d).mean())


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    m = mse(a, b)
    if m < PSNR_MSE_FLOOR:
        return PSNR_CAP
    return 10.0 * math.log10(1.0 / m)


_C1 = 0.01**2
_C2 = 0.03**2
_WIN = 8


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Single-scale SSIM, non-overlapping 8x8 windows, channel-averaged."""
    a, b = _check_pair(a, b)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    h, w, _ = a.shape
    if h < _WIN or w < _WIN:
        raise ValueError(f"images must be at least {_WIN}x{_WIN}")
    hh, ww = (h // _WIN) * _WIN, (w // _WIN) * _WIN
    a64 = a[:hh, :ww].astype(np.float64)
    b64 = b[:hh, :ww].astype(np.float64)

    def windows(x):
        c = x.shape[2]
        return x.reshape(hh // _WIN, _WIN, ww // _WIN, _WIN, c).transpose(0, 2, 4, 1, 3).reshape(
            -1, _WIN * _WIN
        )

    wa, wb = windows(a64), windows(b64)
    mu_a, mu_b = wa.mean(axis=1), wb.mean(axis=1)
    var_a = (wa * wa).mean(axis=1) - mu_a * mu_a
    var_b = (wb * wb).mean(axis=1) - mu_b * mu_b
    cov = (wa * wb).mean(axis=1) - mu_a * mu_b
    num = (2 * mu_a * mu_b + _C1) * (2 * cov + _C2)
    den = (mu_a * mu_a + mu_b * mu_b + _C1) * (var_a + var_b + _C2)
    return float((num / den).mean())


def iou(m1: np.ndarray, m2: np.ndarray) -> float:
    m1 = np.asarray(m1) != 0
    m2 = np.asarray(m2) != 0
    if m1.shape != m2.shape:
        raise ValueError(f"mask shape mismatch: {m1.shape} vs {m2.shape}")
    union = int((m1 | m2).sum())
    if union == 0:
        return 1.0
    return int((m1 & m2).sum()) / union


def masked_l1(a: np.ndarray, b: np.ndarray, region: np.ndarray) -> float:
    """Mean absolute difference restricted to region==True pixels."""
    a, b = _check_pair(a, b)
    region = np.asarray(region, dtype=bool)
    if not region.any():
        return 0.0
    diff = np.abs(a - b).mean(axis=2, dtype=np.float64)
    return float(diff[region].mean())


@dataclass
class CaseReport:
    case: str
    l1: float | None = None
    mse: float | None = None
    psnr: float | None = None
    ssim: float | None = None
    iou: float | None = None
    bg_l1: float | None = None
    error: str | None = None

    def row(self) -> tuple[str, ...]:
        def fmt(v):
            return "" if v is None else f"{v:.6f}"

        return (self.case, fmt(self.l1), fmt(self.mse), fmt(self.psnr), fmt(self.ssim),
                fmt(self.iou), fmt(self.bg_l1))


def evaluate_case(case_dir: Path, cfg: EditConfig, stopwords=None) -> CaseReport:
    report = CaseReport(case=case_dir.name)
    try:
        image = load_png(case_dir / "input.png")
        instruction = (case_dir / "instruction.txt").read_text("utf-8").strip()
        result = run_pipeline(image, instruction, cfg, stopwords=stopwords)
        outside = upsample_mask(result.roi) == 0
        report.bg_l1 = masked_l1(result.image, image, outside)
        expected_path = case_dir / "expected.png"
        if expected_path.exists():
            expected = load_png(expected_path)
            report.l1 = l1(result.image, expected)
            report.mse = mse(result.image, expected)
            report.psnr = psnr(result.image, expected)
            report.ssim = ssim(result.image, expected)
        mask_path = case_dir / "mask.pgm"
        if mask_path.exists():
            ref = load_mask_pgm(mask_path)
            if ref.shape == (256, 256):
                ref = max_pool_grid(ref, 4)
            report.iou = iou(result.roi, ref)
    except Exception as exc:  # noqa: BLE001 - harness must keep going
        report.error = str(exc)
    return report


def aggregate_row(reports: list[CaseReport]) -> tuple[str, ...]:
    cols = ("l1", "mse", "psnr", "ssim", "iou", "bg_l1")
    out = ["__mean__"]
    for col in cols:
        values = [getattr(r, col) for r in reports if getattr(r, col) is not None]
        out.append(f"{sum(values) / len(values):.6f}" if values else "")
    return tuple(out)


def write_report(rows: list[tuple[str, ...]], path: Path) -> None:
    lines = ["\t".join(REPORT_HEADER)]
    lines += ["\t".join(row) for row in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def run_cases(
    cases_dir: str | Path, cfg: EditConfig, out_dir: str | Path, stopwords=None
) -> Path:
    """Evaluate every case subdirectory; returns the report path."""
    cases_dir = Path(cases_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    case_dirs = sorted(p for p in cases_dir.iterdir() if p.is_dir()) if cases_dir.is_dir() else []
    reports = [evaluate_case(d, cfg, stopwords) for d in case_dirs]
    for rep in reports:
        if rep.error:
            print(f"case {rep.case} failed: {rep.error}")
    rows = [r.row() for r in reports]
    if reports:
        rows.append(aggregate_row(reports))
    report_path = out_dir / "report.tsv"
    write_report(rows, report_path)
    if reports:
        from .figures import render_case_figure

        render_case_figure(reports, out_dir / "report.png")
    return report_path
