"""Command-line surface.

Subcommands: segment, localize, edit, metrics, ablate, cases, selftest.
Exit codes: 0 success, 1 usage error, 2 runtime/validation error. Every
pipeline run writes ``config.used`` (the fully resolved configuration);
re-running with that file reproduces the outputs bitwise.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import selftest as selftest_mod
from .config import CLUSTERING_MODES, EDIT_MODES, EditConfig, parse_config, serialize_config
from .fileio import (
    atomic_write_text,
    load_mask_pgm,
    load_png,
    save_mask_pgm,
    save_pgm,
    save_png,
    save_tensor,
)
from .metrics import CaseReport, aggregate_row, iou, l1, masked_l1, mse, psnr, run_cases, ssim, write_report
from .pipeline import run_pipeline, upsample_mask
from .text import load_stopwords

ABLATION_SWEEPS = {
    "points": ("n_points", [25, 100, 225, 400]),
    "clusters": ("k_clusters", [4, 8, 16, 32]),
    "edit-type": ("edit_mode", ["attention_reg", "noise_blend"]),
    "mask-type": ("mask_type", ["ours", "external"]),
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    for f in fields(EditConfig):
        flag = "--" + f.name.replace("_", "-")
        if f.name == "clustering":
            p.add_argument(flag, choices=CLUSTERING_MODES)
        elif f.name == "edit_mode":
            p.add_argument(flag, choices=EDIT_MODES)
        elif f.type == "int":
            p.add_argument(flag, type=int)
        elif f.type == "float":
            p.add_argument(flag, type=float)
        else:
            p.add_argument(flag)
    p.add_argument("--config", help="config file (key = value lines)")
    p.add_argument("--steps", type=int, metavar="N",
                   help="run at N steps, rescaling capture windows proportionally")
    p.add_argument("--stopwords", help="replacement stop-word list file")


def _resolve_config(args: argparse.Namespace) -> EditConfig:
    overrides = {}
    for f in fields(EditConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = v
    cfg = parse_config(args.config, overrides)
    if args.steps is not None:
        cfg = cfg.scaled_to(args.steps)
    return cfg


def _stopword_set(args: argparse.Namespace):
    return load_stopwords(args.stopwords) if getattr(args, "stopwords", None) else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locedit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def pipeline_cmd(name: str, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--image", required=True)
        p.add_argument("--instruction", required=True)
        p.add_argument("--out", required=True)
        _add_config_flags(p)
        return p

    pipeline_cmd("segment", "cluster the image into segments, emit seg.pgm")
    pipeline_cmd("localize", "find the edit region, emit roi.pgm + saliency.lten")
    pipeline_cmd("edit", "run the full edit pipeline")

    m = sub.add_parser("metrics", help="compare two images (optionally two masks)")
    m.add_argument("image_a")
    m.add_argument("image_b")
    m.add_argument("--mask1", help="first mask for IoU")
    m.add_argument("--mask2", help="second mask for IoU")

    a = sub.add_parser("ablate", help="run a named parameter sweep")
    a.add_argument("sweep", choices=sorted(ABLATION_SWEEPS))
    a.add_argument("--image", help="input image (defaults to the bundled sample)")
    a.add_argument("--instruction", default="make her outfit black")
    a.add_argument("--out", required=True)
    _add_config_flags(a)

    c = sub.add_parser("cases", help="evaluate a case directory, emit report.tsv")
    c.add_argument("cases_dir")
    c.add_argument("--out", required=True)
    _add_config_flags(c)

    sub.add_parser("selftest", help="run the built-in invariant checks")
    return parser


def _bundled_sample() -> np.ndarray:
    return load_png(Path(str(resources.files("locedit.data") / "sample.png")))


def _bundled_mask_path() -> Path:
    return Path(str(resources.files("locedit.data") / "sample_mask.pgm"))


def _write_config_used(cfg: EditConfig, out: Path) -> None:
    atomic_write_text(out / "config.used", serialize_config(cfg))


def _save_labels(seg, out: Path) -> None:
    ids = seg.labels
    if ids.max() > 255:
        raise ValueError("too many segments for 8-bit label export")
    save_pgm(ids.astype(np.uint8), out / "seg.pgm")


def cmd_pipeline(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    image = load_png(args.image)
    stopwords = _stopword_set(args)

    if args.command in ("segment", "localize"):
        # localization pass only; the edit pass is not needed for these
        from .pipeline import WEIGHT_SEED, localize
        from .text import tokenize
        from .unet import init_weights

        seq = tokenize(args.instruction, stopwords)
        roi, saliency, seg, _ = localize(image, seq, cfg, init_weights(WEIGHT_SEED))
        _save_labels(seg, out)
        if args.command == "localize":
            save_mask_pgm(roi, out / "roi.pgm")
            save_tensor(saliency, out / "saliency.lten")
        seg_labels = seg.labels
    else:
        result = run_pipeline(image, args.instruction, cfg, stopwords=stopwords)
        save_png(result.image, out / "edited.png")
        save_mask_pgm(result.roi, out / "roi.pgm")
        if result.seg is not None:
            _save_labels(result.seg, out)
        if result.saliency is not None:
            save_tensor(result.saliency, out / "saliency.lten")
        roi, saliency = result.roi, result.saliency
        seg_labels = result.seg.labels if result.seg is not None else None

    _write_config_used(cfg, out)
    from .figures import render_localization_figure

    render_localization_figure(image, saliency, seg_labels, roi, out / "overlay.png")
    return 0


def cmd_metrics(args: argparse.Namespace) -> int:
    a = load_png(args.image_a)
    b = load_png(args.image_b)
    print(f"l1={l1(a, b):.6f}")
    print(f"mse={mse(a, b):.6f}")
    print(f"psnr={psnr(a, b):.6f}")
    print(f"ssim={ssim(a, b):.6f}")
    if args.mask1 and args.mask2:
        m1 = load_mask_pgm(args.mask1)
        m2 = load_mask_pgm(args.mask2)
        print(f"iou={iou(m1, m2):.6f}")
    elif args.mask1 or args.mask2:
        raise ValueError("IoU needs both --mask1 and --mask2")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    image = load_png(args.image) if args.image else _bundled_sample()
    stopwords = _stopword_set(args)

    param, values = ABLATION_SWEEPS[args.sweep]
    external = cfg.external_mask or (None if args.image else str(_bundled_mask_path()))
    if args.sweep == "mask-type" and not external:
        raise ValueError("mask-type sweep needs --external-mask (or the bundled sample)")

    reference_mask = load_mask_pgm(external) if external else None
    if reference_mask is not None and reference_mask.shape == (256, 256):
        reference_mask = reference_mask.reshape(64, 4, 64, 4).max(axis=(1, 3))

    reports: list[CaseReport] = []
    for value in values:
        if param == "mask_type":
            run_cfg = replace(cfg, external_mask=(external if value == "external" else ""))
        else:
            run_cfg = replace(cfg, **{param: value})
        result = run_pipeline(image, args.instruction, run_cfg, stopwords=stopwords)
        rep = CaseReport(case=f"{args.sweep}={value}")
        rep.l1 = l1(result.image, image)
        rep.mse = mse(result.image, image)
        rep.psnr = psnr(result.image, image)
        rep.ssim = ssim(result.image, image)
        rep.bg_l1 = masked_l1(result.image, image, upsample_mask(result.roi) == 0)
        if reference_mask is not None:
            rep.iou = iou(result.roi, reference_mask)
        reports.append(rep)
        print("\t".join(rep.row()))

    rows = [r.row() for r in reports] + [aggregate_row(reports)]
    write_report(rows, out / "report.tsv")
    from .figures import render_sweep_figure

    render_sweep_figure(args.sweep, values, reports, out / "report.png")
    _write_config_used(cfg, out)
    return 0


def cmd_cases(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    report = run_cases(args.cases_dir, cfg, args.out, stopwords=_stopword_set(args))
    print(f"report written to {report}")
    _write_config_used(cfg, Path(args.out))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command in ("segment", "localize", "edit"):
            return cmd_pipeline(args)
        if args.command == "metrics":
            return cmd_metrics(args)
        if args.command == "ablate":
            return cmd_ablate(args)
        if args.command == "cases":
            return cmd_cases(args)
        if args.command == "selftest":
            return selftest_mod.run()
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
