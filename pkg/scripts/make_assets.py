"""Regenerate the bundled sample image, mask, and case directories.

Run from the repository root:  python3 scripts/make_assets.py
"""

from pathlib import Path

from locedit.fileio import save_mask_pgm, save_png
from locedit.sampleimg import outfit_mask, sample_image

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "src" / "locedit" / "data"
CASES = ROOT / "cases"

CASE_SPECS = [
    ("outfit", 0, "make her outfit black", True, False),
    ("ball", 1, "remove the yellow ball", False, True),
    ("sky", 2, "turn the sky blue", False, False),
]


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    save_png(sample_image(0), DATA / "sample.png")
    save_mask_pgm(outfit_mask(0), DATA / "sample_mask.pgm")

    for name, variant, instruction, with_mask, with_expected in CASE_SPECS:
        case = CASES / name
        case.mkdir(parents=True, exist_ok=True)
        img = sample_image(variant)
        save_png(img, case / "input.png")
        (case / "instruction.txt").write_text(instruction + "\n")
        if with_mask:
            save_mask_pgm(outfit_mask(variant), case / "mask.pgm")
        if with_expected:
            # the identity edit serves as a reference for the metric columns
            save_png(img, case / "expected.png")
    print(f"assets written under {DATA} and {CASES}")


if __name__ == "__main__":
    main()
