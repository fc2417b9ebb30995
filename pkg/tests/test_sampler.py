"""Schedule, latent codec, guidance combination, and the sample loop."""

import numpy as np
import pytest

from locedit.rng import Prng
from locedit.sampler import (
    CaptureWindows,
    Schedule,
    cfg_combine,
    decode_latent,
    encode_latent,
    sample,
)
from locedit.sampleimg import sample_image
from locedit.text import embed, tokenize
from locedit.unet import BLOCK_IDS, init_weights


@pytest.fixture(scope="module")
def weights():
    return init_weights(42)


@pytest.fixture(scope="module")
def image():
    return sample_image(0)


@pytest.fixture(scope="module")
def text_embedding():
    return embed(tokenize("make her outfit black"))


class TestSchedule:
    def test_endpoints_exact(self):
        s = Schedule.linear(100)
        assert s.sigmas[100] == 1.0
        assert s.sigmas[0] == 0.0

    def test_strictly_monotone(self):
        s = Schedule.linear(37)
        assert (np.diff(s.sigmas) > 0).all()

    def test_too_few_steps(self):
        with pytest.raises(ValueError):
            Schedule.linear(1)


class TestLatentCodec:
    def test_constant_image_round_trip(self):
        img = np.full((256, 256, 3), 0.5, np.float32)
        z = encode_latent(img)
        assert np.array_equal(z[:, :, :3], np.full((64, 64, 3), 0.5, np.float32))
        assert np.array_equal(z[:, :, 3], np.zeros((64, 64), np.float32))
        back = decode_latent(z)
        assert np.abs(back - img).max() < 1e-6

    def test_blocked_image_gives_exact_block_means(self):
        rng = np.random.RandomState(0)
        blocks = rng.rand(64, 64, 3).astype(np.float32)
        img = np.repeat(np.repeat(blocks, 4, axis=0), 4, axis=1)
        z = encode_latent(img)
        # oracle: direct per-block averaging
        want = np.empty_like(blocks)
        for r in range(64):
            for c in range(64):
                want[r, c] = img[4 * r : 4 * r + 4, 4 * c : 4 * c + 4].mean(axis=(0, 1))
        assert np.abs(z[:, :, :3] - want).max() < 1e-6

    def test_decode_clamps(self):
        z = np.zeros((64, 64, 4), np.float32)
        z[:, :, 0] = 7.0
        z[:, :, 1] = -3.0
        img = decode_latent(z)
        assert img.min() >= 0.0 and img.max() <= 1.0


class TestCfgCombine:
    @pytest.fixture()
    def branches(self):
        rng = np.random.RandomState(3)
        return [rng.randn(64, 64, 4).astype(np.float32) for _ in range(3)]

    def test_unit_scales_collapse_to_text_branch_bitwise(self, branches):
        e_uu, e_iu, e_it = branches
        out = cfg_combine(e_uu, e_iu, e_it, 1.0, 1.0)
        assert np.array_equal(out.view(np.uint32), e_it.view(np.uint32))

    def test_zero_text_scale_collapses_to_image_branch_bitwise(self, branches):
        e_uu, e_iu, e_it = branches
        out = cfg_combine(e_uu, e_iu, e_it, 1.0, 0.0)
        assert np.array_equal(out.view(np.uint32), e_iu.view(np.uint32))

    def test_constant_branch_arithmetic(self):
        shape = (64, 64, 4)
        e_uu = np.zeros(shape, np.float32)
        e_iu = np.ones(shape, np.float32)
        e_it = np.full(shape, 2.0, np.float32)
        out = cfg_combine(e_uu, e_iu, e_it, 1.5, 3.5)
        # 0 + 1.5*(1-0) + 3.5*(2-1) = 5.0
        assert np.array_equal(out, np.full(shape, 5.0, np.float32))

    def test_linearity_superposition(self):
        rng = np.random.RandomState(8)
        for _ in range(10):
            a = [rng.randn(8, 8, 4).astype(np.float32) for _ in range(3)]
            b = [rng.randn(8, 8, 4).astype(np.float32) for _ in range(3)]
            s_i, s_t = 1.5, 3.5
            combined = cfg_combine(a[0] + b[0], a[1] + b[1], a[2] + b[2], s_i, s_t)
            split = cfg_combine(*a, s_i, s_t) + cfg_combine(*b, s_i, s_t)
            assert np.abs(combined - split).max() < 1e-5

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            cfg_combine(
                np.zeros((2, 2), np.float32),
                np.zeros((2, 2), np.float32),
                np.zeros((3, 3), np.float32),
                1.0,
                1.0,
            )


class TestSampleLoop:
    def test_zero_weight_denoiser_is_fixed_point(self, image, weights):
        zero = weights.zeroed()
        run = sample(image, None, zero, 2, seed=9, s_img=1.5, s_txt=0.0)
        z_t = encode_latent(image) + Prng(9).fill_gaussian((64, 64, 4))
        assert np.array_equal(run.z0, z_t)

    def test_bitwise_repeatable(self, image, weights, text_embedding):
        kw = dict(total_steps=3, seed=4, s_img=1.5, s_txt=7.5)
        a = sample(image, text_embedding, weights, **kw)
        b = sample(image, text_embedding, weights, **kw)
        assert np.array_equal(a.z0.view(np.uint32), b.z0.view(np.uint32))
        assert a.hooks.features.keys() == b.hooks.features.keys()

    def test_capture_window_counts(self, image, weights, text_embedding):
        windows = CaptureWindows(feature_lo=2, feature_hi=4, attn_lo=1, attn_hi=5)
        run = sample(
            image, text_embedding, weights, 6, seed=1, s_img=1.5, s_txt=7.5, windows=windows
        )
        for block in BLOCK_IDS:
            assert run.hooks.feature_steps(block) == [2, 3, 4]
            assert run.hooks.attn_steps(block) == [1, 2, 3, 4, 5]

    def test_no_capture_outside_windows(self, image, weights, text_embedding):
        windows = CaptureWindows(feature_lo=2, feature_hi=2, attn_lo=3, attn_hi=3)
        run = sample(
            image, text_embedding, weights, 4, seed=1, s_img=1.5, s_txt=7.5, windows=windows
        )
        steps_f = {s for (s, _) in run.hooks.features}
        steps_a = {s for (s, _) in run.hooks.attn}
        assert steps_f == {2} and steps_a == {3}

    def test_features_only_from_image_branch(self, image, weights):
        # no text embedding: attention maps must never be captured
        windows = CaptureWindows(feature_lo=1, feature_hi=2, attn_lo=1, attn_hi=2)
        run = sample(image, None, weights, 2, seed=1, s_img=1.5, s_txt=0.0, windows=windows)
        assert run.hooks.features and not run.hooks.attn
