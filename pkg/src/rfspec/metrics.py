"""Spectrum comparison metrics on max-normalised grids.

LPIPS is not provided; it needs a pretrained perceptual network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DomainError, ShapeError, SizeError

PSNR_IDENTICAL = math.inf
LPIPS = "unsupported"


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def normalize_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    """Divide both by ``max(truth)`` and clamp the prediction to [0, 1]."""
    pred, truth = _pair(pred, truth)
    peak = float(truth.max())
    if not peak > 0:
        raise DomainError("ground-truth spectrum has no positive power")
    return np.clip(pred / peak, 0.0, 1.0), truth / peak


def mse(a, b) -> float:
    a, b = _pair(a, b)
    d = a - b
    return float(np.mean(d * d))


def psnr(a, b, peak: float = 1.0) -> float:
    """PSNR in dB; ``math.inf`` for identical inputs."""
    m = mse(a, b)
    if m == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * math.log10(peak * peak / m)


def psnr_from_mse(m: float, peak: float = 1.0) -> float:
    return PSNR_IDENTICAL if m == 0.0 else 10.0 * math.log10(peak * peak / m)


def ssim(a, b, window: int = 8, k1: float = 0.01, k2: float = 0.03, data_range: float = 1.0) -> float:
    """Mean SSIM over every full ``window x window`` uniform window (stride 1).

    Local statistics are population (1/N) moments.
    """
    a, b = _pair(a, b)
    if a.ndim != 2 or a.shape[0] < window or a.shape[1] < window:
        raise SizeError(f"SSIM needs at least a {window}x{window} grid")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    wa = sliding_window_view(a, (window, window))
    wb = sliding_window_view(b, (window, window))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    da = wa - mu_a[..., None, None]
    db = wb - mu_b[..., None, None]
    var_a = (da * da).mean(axis=(-2, -1))
    var_b = (db * db).mean(axis=(-2, -1))
    cov = (da * db).mean(axis=(-2, -1))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def gaussian_nll(pred, truth, variance: float) -> float:
    """Negative log-likelihood of ``truth`` under i.i.d. N(pred, variance) per cell."""
    if not variance > 0:
        raise DomainError("variance must be positive")
    pred, truth = _pair(pred, truth)
    q = pred.size
    r = pred - truth
    return 0.5 * q * math.log(2 * math.pi * variance) + float(np.sum(r * r)) / (2 * variance)


@dataclass(frozen=True)
class MetricReport:
    mse: float
    psnr_db: float
    ssim: float
    lpips: str = LPIPS


def compare(pred, truth) -> MetricReport:
    """Normalise the pair by the ground truth peak and compute all metrics."""
    p, t = normalize_pair(pred, truth)
    m = mse(p, t)
    return MetricReport(m, psnr_from_mse(m), ssim(p, t))
