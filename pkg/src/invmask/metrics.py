"""Image-quality reporting: PSNR, SSIM, RMSE, MAE on the 0-255 scale.

Inputs live in the [0,1] float domain like everything else; conversion to
the 8-bit scale happens here so the numbers line up with common practice.
Batch inputs are scored per image and averaged; identical inputs yield an
infinite PSNR sentinel rather than a cap.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import ShapeError
from .tensor import Tensor

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    rmse: float
    mae: float


def _gaussian_window():
    half = (SSIM_WINDOW - 1) / 2.0
    coords = np.arange(SSIM_WINDOW) - half
    g = np.exp(-(coords**2) / (2.0 * SSIM_SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


_WINDOW = _gaussian_window()


def psnr_from_rmse(rmse):
    if rmse == 0.0:
        return math.inf
    return 20.0 * math.log10(DYNAMIC_RANGE / rmse)


def _ssim_channel(a, b):
    # original formulation: Gaussian-weighted local stats, valid region only
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    mu_a = convolve2d(a, _WINDOW, mode="valid")
    mu_b = convolve2d(b, _WINDOW, mode="valid")
    var_a = convolve2d(a * a, _WINDOW, mode="valid") - mu_a * mu_a
    var_b = convolve2d(b * b, _WINDOW, mode="valid") - mu_b * mu_b
    cov = convolve2d(a * b, _WINDOW, mode="valid") - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def _as_values(x):
    return x.values if isinstance(x, Tensor) else np.asarray(x)


def compute_metrics(a, b, pooled=False):
    """Score two image batches; per-image averages unless ``pooled``.

    ``pooled`` treats the whole batch as one pixel population for PSNR,
    RMSE and MAE; per-image is how per-table aggregates are usually read,
    and keeps the PSNR/RMSE identity intact at batch size one.
    """
    av, bv = _as_values(a), _as_values(b)
    if av.shape != bv.shape:
        raise ShapeError(f"compute_metrics: shapes {av.shape} and {bv.shape} differ")
    if av.ndim != 4:
        raise ShapeError(f"compute_metrics expects rank-4 batches, got shape {av.shape}")
    if min(av.shape[2], av.shape[3]) < SSIM_WINDOW:
        raise ShapeError(f"images must be at least {SSIM_WINDOW} pixels per side for SSIM")
    av = av.astype(np.float64) * DYNAMIC_RANGE
    bv = bv.astype(np.float64) * DYNAMIC_RANGE

    diff = av - bv
    if pooled:
        rmse = float(np.sqrt(np.mean(diff * diff)))
        mae = float(np.mean(np.abs(diff)))
        psnr = psnr_from_rmse(rmse)
    else:
        per_mse = np.mean(diff * diff, axis=(1, 2, 3))
        per_rmse = np.sqrt(per_mse)
        rmse = float(np.mean(per_rmse))
        mae = float(np.mean(np.abs(diff)))
        psnr = float(np.mean([psnr_from_rmse(r) for r in per_rmse]))

    ssims = [
        _ssim_channel(av[i, c], bv[i, c])
        for i in range(av.shape[0])
        for c in range(av.shape[1])
    ]
    return MetricReport(psnr=psnr, ssim=float(np.mean(ssims)), rmse=rmse, mae=mae)
