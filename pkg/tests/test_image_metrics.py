"""PSNR and MS-SSIM against direct-formula and per-window oracles."""
import numpy as np
import pytest

import oracles
from conftest import gray_image, image_pairs
from diagramforge import image_metrics
from diagramforge.errors import TooSmall
from diagramforge.sandbox import RasterImage


def rgb_image(arr: np.ndarray) -> RasterImage:
    arr = np.asarray(arr, dtype=np.uint8)
    return RasterImage(arr.shape[1], arr.shape[0], "rgb", arr.tobytes())


class TestPsnr:
    def test_identical_hits_cap(self):
        a = gray_image(np.full((32, 32), 40))
        assert image_metrics.psnr(a, a) == 100.0

    def test_black_vs_white_clamps_to_zero(self):
        a = gray_image(np.zeros((16, 16)))
        b = gray_image(np.full((16, 16), 255))
        assert image_metrics.psnr(a, b) == 0.0

    def test_one_flipped_pixel_matches_direct_mse(self):
        base = np.full((10, 10), 200, np.uint8)
        flipped = base.copy()
        flipped[4, 7] = 0
        expected = oracles.psnr_oracle(base.tolist(), flipped.tolist())
        assert image_metrics.psnr(
            gray_image(base), gray_image(flipped)
        ) == pytest.approx(expected, abs=1e-9)

    def test_symmetry(self):
        for a, b in image_pairs():
            assert image_metrics.psnr(gray_image(a), gray_image(b)) == (
                image_metrics.psnr(gray_image(b), gray_image(a))
            )

    def test_size_mismatch_pads_with_white(self):
        a = gray_image(np.full((8, 8), 255))
        b = gray_image(np.full((12, 12), 255))
        assert image_metrics.psnr(a, b) == 100.0

    def test_oracle_equivalence(self):
        for a, b in image_pairs():
            expected = oracles.psnr_oracle(a.tolist(), b.tolist())
            assert image_metrics.psnr(gray_image(a), gray_image(b)) == pytest.approx(
                expected, abs=1e-6
            )

    def test_luma_conversion(self):
        arr = np.zeros((12, 12, 3), np.uint8)
        arr[:, :, 0] = 100  # pure red
        luma = image_metrics.to_luma(rgb_image(arr))
        assert luma[0, 0] == pytest.approx(0.299 * 100)


class TestSsim:
    def test_per_window_oracle_equivalence(self):
        for a, b in image_pairs():
            if min(a.shape) < image_metrics.SSIM_WINDOW:
                continue
            got_ssim, got_cs = image_metrics.ssim_components(
                a.astype(float), b.astype(float)
            )
            exp_ssim, exp_cs = oracles.ssim_windows_oracle(a.tolist(), b.tolist())
            assert got_ssim == pytest.approx(exp_ssim, abs=1e-6)
            assert got_cs == pytest.approx(exp_cs, abs=1e-6)

    def test_identical_is_one(self):
        arr = np.random.default_rng(3).integers(0, 256, (20, 20)).astype(float)
        ssim, cs = image_metrics.ssim_components(arr, arr)
        assert ssim == pytest.approx(1.0, abs=1e-9)
        assert cs == pytest.approx(1.0, abs=1e-9)


class TestMsSsim:
    def test_identical_near_100(self):
        arr = np.random.default_rng(5).integers(0, 256, (200, 200), np.uint8)
        img = gray_image(arr)
        assert image_metrics.ms_ssim(img, img) == pytest.approx(100.0, abs=1e-6)

    def test_full_five_scales(self):
        arr = np.random.default_rng(6).integers(0, 256, (200, 200), np.uint8)
        result = image_metrics.ms_ssim_detail(gray_image(arr), gray_image(arr))
        assert result.scales_used == 5
        assert not result.reduced

    def test_reduced_scales_flagged(self):
        arr = np.full((64, 64), 100, np.uint8)
        result = image_metrics.ms_ssim_detail(gray_image(arr), gray_image(arr))
        assert result.reduced
        assert 1 <= result.scales_used < 5

    def test_noise_vs_constant_near_zero(self):
        rng = np.random.default_rng(11)
        noise = gray_image(rng.integers(0, 256, (32, 32), np.uint8))
        flat = gray_image(np.full((32, 32), 128, np.uint8))
        assert image_metrics.ms_ssim(noise, flat) < 10.0

    def test_too_small(self):
        tiny = gray_image(np.zeros((8, 8), np.uint8))
        with pytest.raises(TooSmall):
            image_metrics.ms_ssim(tiny, tiny)

    def test_range(self):
        for a, b in image_pairs():
            if min(a.shape) < image_metrics.SSIM_WINDOW:
                continue
            value = image_metrics.ms_ssim(gray_image(a), gray_image(b))
            assert 0.0 <= value <= 100.0
