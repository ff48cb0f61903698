"""Image fidelity metrics on the 0-255 intensity scale."""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

PEAK = 255.0
K1, K2 = 0.01, 0.03


def _pair(reference, test) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(getattr(reference, "data", reference), dtype=np.float64)
    b = np.asarray(getattr(test, "data", test), dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, test) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical images."""
    a, b = _pair(reference, test)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma**2))
    w = np.outer(g, g)
    return w / w.sum()


def ssim_map(reference, test, window: np.ndarray | None = None) -> np.ndarray:
    a, b = _pair(reference, test)
    w = gaussian_window() if window is None else window
    if min(a.shape) < w.shape[0]:
        raise ValueError("image smaller than the SSIM window")
    c1, c2 = (K1 * PEAK) ** 2, (K2 * PEAK) ** 2

    def filt(x):
        return fftconvolve(x, w[::-1, ::-1], mode="valid")

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))


def ssim(reference, test, window: np.ndarray | None = None) -> float:
    """Mean structural similarity over 11x11 Gaussian (sigma 1.5) windows,
    evaluated only where the window fits inside the image."""
    return float(np.mean(ssim_map(reference, test, window)))
