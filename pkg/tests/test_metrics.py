"""Metric oracles and the case-directory harness."""

import numpy as np
import pytest

from locedit.config import EditConfig
from locedit.fileio import save_mask_pgm, save_png
from locedit.metrics import iou, l1, mse, psnr, run_cases, ssim
from locedit.sampleimg import outfit_mask, sample_image


class TestL1:
    def test_identity(self):
        img = np.random.RandomState(0).rand(8, 8, 3).astype(np.float32)
        assert l1(img, img) == 0.0

    def test_full_swing(self):
        z = np.zeros((8, 8, 3), np.float32)
        assert l1(z, np.ones_like(z)) == 1.0

    def test_hand_2x2(self):
        a = np.array([[0.0, 0.5], [1.0, 0.25]], np.float32)
        b = np.array([[0.5, 0.5], [0.0, 0.25]], np.float32)
        assert l1(a, b) == pytest.approx(0.375, abs=0)  # mean(0.5, 0, 1, 0)

    def test_symmetry(self):
        rng = np.random.RandomState(1)
        a, b = rng.rand(8, 8, 3).astype(np.float32), rng.rand(8, 8, 3).astype(np.float32)
        assert l1(a, b) == l1(b, a)


class TestMsePsnr:
    def test_identical_hits_cap(self):
        img = np.random.RandomState(2).rand(8, 8, 3).astype(np.float32)
        assert psnr(img, img) == 99.0

    def test_mse_001_gives_20db(self):
        a = np.zeros((10, 10), np.float32)
        b = np.full((10, 10), 0.1, np.float32)
        assert mse(a, b) == pytest.approx(0.01, rel=1e-6)
        assert psnr(a, b) == pytest.approx(20.0, abs=1e-4)

    def test_full_swing_0db(self):
        z = np.zeros((8, 8, 3), np.float32)
        assert mse(z, np.ones_like(z)) == 1.0
        assert psnr(z, np.ones_like(z)) == pytest.approx(0.0, abs=0)

    def test_monotone_in_mse(self):
        base = np.zeros((16, 16), np.float32)
        values = [psnr(base, np.full_like(base, d)) for d in (0.05, 0.1, 0.2, 0.4)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_cap_engages_below_floor(self):
        a = np.zeros((100, 100), np.float32)
        b = a.copy()
        b[0, 0] = 3e-4  # mse = 9e-12 < 1e-10
        assert mse(a, b) < 1e-10
        assert psnr(a, b) == 99.0


class TestSsim:
    def test_identity_is_exactly_one(self):
        img = np.random.RandomState(3).rand(32, 32, 3).astype(np.float32)
        assert ssim(img, img) == 1.0

    def test_symmetry(self):
        rng = np.random.RandomState(4)
        a, b = rng.rand(32, 32, 3).astype(np.float32), rng.rand(32, 32, 3).astype(np.float32)
        assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-9)

    def test_negative_image_matches_window_recomputation(self):
        rng = np.random.RandomState(5)
        a = rng.rand(8, 8).astype(np.float32)
        b = (1.0 - a).astype(np.float32)
        got = ssim(a, b)
        # independent single-window recomputation from the definition
        c1, c2 = 0.01**2, 0.03**2
        x, y = a.astype(np.float64).ravel(), b.astype(np.float64).ravel()
        mx, my = x.mean(), y.mean()
        vx, vy = x.var(), y.var()
        cov = ((x - mx) * (y - my)).mean()
        want = ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))
        assert got == pytest.approx(want, abs=1e-9)

    def test_constant_offset_closed_form(self):
        a = np.full((8, 8), 0.4, np.float32)
        b = np.full((8, 8), 0.5, np.float32)
        got = ssim(a, b)
        # zero-variance windows: SSIM = (2 mu_a mu_b + C1) / (mu_a^2 + mu_b^2 + C1)
        mu_a, mu_b = float(a[0, 0]), float(b[0, 0])
        c1 = 0.01**2
        want = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
        assert got == pytest.approx(want, abs=1e-7)

    def test_window_grid_is_8x8_stride_8(self):
        # a defect confined to one window must leave other windows' scores at 1
        a = np.zeros((16, 16), np.float32)
        b = a.copy()
        b[:8, :8] = np.random.RandomState(6).rand(8, 8).astype(np.float32)
        got = ssim(a, b)
        damaged = ssim(a[:8, :8], b[:8, :8])
        assert got == pytest.approx((damaged + 3.0) / 4.0, abs=1e-9)


class TestIou:
    def test_identical_masks(self):
        m = (np.random.RandomState(7).rand(16, 16) < 0.3).astype(np.uint8)
        assert iou(m, m) == 1.0

    def test_disjoint_masks(self):
        a = np.zeros((8, 8), np.uint8)
        b = np.zeros((8, 8), np.uint8)
        a[0, 0] = 1
        b[7, 7] = 1
        assert iou(a, b) == 0.0

    def test_half_overlap_counting_oracle(self):
        a = np.zeros((4, 4), np.uint8)
        b = np.zeros((4, 4), np.uint8)
        a[0, :2] = 1  # cells {(0,0),(0,1)}
        b[0, 1:3] = 1  # cells {(0,1),(0,2)}
        assert iou(a, b) == pytest.approx(1 / 3)  # |∩|=1, |∪|=3

    def test_both_empty_defined_as_one(self):
        z = np.zeros((4, 4), np.uint8)
        assert iou(z, z) == 1.0

    def test_symmetry(self):
        rng = np.random.RandomState(8)
        a = (rng.rand(16, 16) < 0.4).astype(np.uint8)
        b = (rng.rand(16, 16) < 0.4).astype(np.uint8)
        assert iou(a, b) == iou(b, a)


@pytest.fixture(scope="module")
def case_cfg():
    return EditConfig().scaled_to(3)


class TestRunCases:
    def test_empty_directory_gives_empty_report(self, tmp_path, case_cfg):
        cases = tmp_path / "cases"
        cases.mkdir()
        report = run_cases(cases, case_cfg, tmp_path / "out")
        lines = report.read_text().splitlines()
        assert lines == ["case\tl1\tmse\tpsnr\tssim\tiou\tbg_l1"]

    def test_case_without_expected_has_null_comparison_fields(self, tmp_path, case_cfg):
        case = tmp_path / "cases" / "solo"
        case.mkdir(parents=True)
        save_png(sample_image(0), case / "input.png")
        (case / "instruction.txt").write_text("make her outfit black")
        report = run_cases(tmp_path / "cases", case_cfg, tmp_path / "out")
        lines = report.read_text().splitlines()
        header = lines[0].split("\t")
        row = dict(zip(header, lines[1].split("\t")))
        assert row["case"] == "solo"
        assert row["l1"] == "" and row["ssim"] == "" and row["iou"] == ""
        assert row["bg_l1"] != ""

    def test_three_cases_aggregate_is_mean_of_rows(self, tmp_path, case_cfg):
        root = tmp_path / "cases"
        for i, name in enumerate(["a", "b", "c"]):
            case = root / name
            case.mkdir(parents=True)
            img = sample_image(i)
            save_png(img, case / "input.png")
            (case / "instruction.txt").write_text("make her outfit black")
            save_png(img, case / "expected.png")
            if i == 0:
                save_mask_pgm(outfit_mask(0), case / "mask.pgm")
        report = run_cases(root, case_cfg, tmp_path / "out")
        lines = [l.split("\t") for l in report.read_text().splitlines()]
        header, rows, agg = lines[0], lines[1:4], lines[4]
        assert agg[0] == "__mean__"
        for col in range(1, 7):
            values = [float(r[col]) for r in rows if r[col] != ""]
            if values:
                assert float(agg[col]) == pytest.approx(sum(values) / len(values), abs=5e-7)
        assert (tmp_path / "out" / "report.png").exists()

    def test_malformed_case_recorded_not_fatal(self, tmp_path, case_cfg, capsys):
        root = tmp_path / "cases"
        bad = root / "broken"
        bad.mkdir(parents=True)
        (bad / "instruction.txt").write_text("anything")  # no input.png
        good = root / "fine"
        good.mkdir()
        save_png(sample_image(1), good / "input.png")
        (good / "instruction.txt").write_text("make her outfit black")
        report = run_cases(root, case_cfg, tmp_path / "out")
        out = capsys.readouterr().out
        assert "broken" in out and "failed" in out
        lines = report.read_text().splitlines()
        assert len(lines) == 4  # header + 2 cases + aggregate
