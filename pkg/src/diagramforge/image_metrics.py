"""Pixel-space diagram quality metrics (PSNR, multi-scale SSIM).

Differently-sized renders are normalized by padding both onto a shared
white canvas and converting to luma before comparison.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import TooSmall
from .sandbox import RasterImage

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
K1, K2 = 0.01, 0.03
L = 255.0
MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
FULL_SCALE_MIN_EDGE = 176  # 11 * 2**4


def to_luma(img: RasterImage) -> np.ndarray:
    arr = img.to_array().astype(np.float64)
    if img.channels == "gray":
        return arr[:, :, 0]
    return 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]


def normalize_pair(a: RasterImage, b: RasterImage) -> tuple[np.ndarray, np.ndarray]:
    """Pads both luma images onto the larger common canvas with white."""
    la, lb = to_luma(a), to_luma(b)
    height = max(la.shape[0], lb.shape[0])
    width = max(la.shape[1], lb.shape[1])

    def pad(x: np.ndarray) -> np.ndarray:
        out = np.full((height, width), 255.0)
        out[: x.shape[0], : x.shape[1]] = x
        return out

    return pad(la), pad(lb)


def psnr(a: RasterImage, b: RasterImage) -> float:
    la, lb = normalize_pair(a, b)
    mse = float(np.mean((la - lb) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    value = 10.0 * np.log10(L * L / mse)
    return float(min(max(value, 0.0), PSNR_CAP_DB))


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords ** 2) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


_KERNEL = _gaussian_kernel()


def _filter(x: np.ndarray) -> np.ndarray:
    return fftconvolve(x, _KERNEL, mode="valid")


def ssim_components(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Mean SSIM and mean contrast-structure term over all valid windows."""
    c1 = (K1 * L) ** 2
    c2 = (K2 * L) ** 2
    mu_a = _filter(a)
    mu_b = _filter(b)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    sigma_aa = _filter(a * a) - mu_aa
    sigma_bb = _filter(b * b) - mu_bb
    sigma_ab = _filter(a * b) - mu_ab
    cs_map = (2 * sigma_ab + c2) / (sigma_aa + sigma_bb + c2)
    ssim_map = ((2 * mu_ab + c1) / (mu_aa + mu_bb + c1)) * cs_map
    return float(ssim_map.mean()), float(cs_map.mean())


def _downsample(x: np.ndarray) -> np.ndarray:
    h, w = x.shape
    x = x[: h - h % 2, : w - w % 2]
    return (x[0::2, 0::2] + x[1::2, 0::2] + x[0::2, 1::2] + x[1::2, 1::2]) / 4.0


@dataclass
class MsSsimResult:
    value: float       # percentage in [0, 100]
    scales_used: int
    reduced: bool      # true when fewer than 5 scales fit the inputs


def ms_ssim_detail(a: RasterImage, b: RasterImage) -> MsSsimResult:
    la, lb = normalize_pair(a, b)
    min_edge = min(la.shape)
    if min_edge < SSIM_WINDOW:
        raise TooSmall(
            f"minimum edge {min_edge}px is below the {SSIM_WINDOW}px window"
        )
    scales = 1
    while scales < len(MS_SSIM_WEIGHTS) and (min_edge >> scales) >= SSIM_WINDOW:
        scales += 1
    weights = np.array(MS_SSIM_WEIGHTS[:scales])
    weights = weights / weights.sum()

    value = 1.0
    for level in range(scales):
        ssim_mean, cs_mean = ssim_components(la, lb)
        if level == scales - 1:
            value *= max(ssim_mean, 0.0) ** weights[level]
        else:
            value *= max(cs_mean, 0.0) ** weights[level]
            la = _downsample(la)
            lb = _downsample(lb)
    return MsSsimResult(
        value=100.0 * float(value),
        scales_used=scales,
        reduced=scales < len(MS_SSIM_WEIGHTS),
    )


def ms_ssim(a: RasterImage, b: RasterImage) -> float:
    return ms_ssim_detail(a, b).value
