"""Transform-domain shrinkage, noise estimation and collaborative fusion."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .wavelet import CoeffSet

MAD_SCALE = 0.6745


def universal_threshold(sigma: float, n: int) -> float:
    return sigma * math.sqrt(2.0 * math.log(n))


def activity_probability(c: np.ndarray, sigma: float, n: int) -> np.ndarray:
    """Chance that a coefficient carries signal, ``1 - exp(-c^2 / (2 lam sigma^2))``
    with ``lam = 2 ln n``. No prior on the support is assumed."""
    lam = 2.0 * math.log(n)
    return -np.expm1(-(c * c) / (2.0 * lam * sigma * sigma))


def shrink(coeffs: CoeffSet, sigma: float, rule: str = "universal", lam: float = 1.0) -> CoeffSet:
    """Shrink detail coefficients; the approximation band is kept.

    ``rule="universal"`` soft-thresholds at the universal threshold and scales
    by the activity probability. ``rule="gain"`` has no dead zone: each
    coefficient is multiplied by ``1 - exp(-c^2 / (2 lam sigma^2))``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if rule not in ("universal", "gain"):
        raise ValueError(f"unknown shrink rule {rule!r}")
    c = coeffs.coeffs
    n = c.size
    mask = coeffs.detail_mask()
    p = np.ones_like(c)
    out = c.copy()
    d = c[mask]
    if rule == "universal":
        p[mask] = activity_probability(d, sigma, n)
        out[mask] = p[mask] * np.sign(d) * np.maximum(np.abs(d) - universal_threshold(sigma, n), 0.0)
    else:
        if not lam > 0:
            raise ValueError("lam must be positive")
        p[mask] = -np.expm1(-(d * d) / (2.0 * lam * sigma * sigma))
        out[mask] = p[mask] * d
    return coeffs.copy(coeffs=out, activity=p, sigma=sigma)


def estimate_sigma(coeffs: CoeffSet) -> float:
    """Median absolute deviation of the finest detail bands, scaled for Gaussian noise."""
    fine = coeffs.finest_details()
    if fine.size == 0:
        raise ValueError("finest detail band is empty")
    return float(np.median(np.abs(fine)) / MAD_SCALE)


def fusion_weights(estimates: Sequence[CoeffSet], bandwidth: float) -> np.ndarray:
    """Weights proportional to each estimate's summed similarity to all others."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    stack = np.stack([e.coeffs for e in estimates])
    m = len(estimates)
    sim = np.ones((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            mse = float(np.mean((stack[i] - stack[j]) ** 2))
            sim[i, j] = sim[j, i] = math.exp(-mse / bandwidth**2)
    w = sim.sum(axis=0)
    return w / w.sum()


def collaborative_fuse(estimates: Sequence[CoeffSet], bandwidth: float) -> CoeffSet:
    if not estimates:
        raise ValueError("need at least one estimate")
    first = estimates[0]
    for e in estimates[1:]:
        if e.coeffs.shape != first.coeffs.shape or e.depth != first.depth:
            raise ValueError("estimates must share shape and depth")
    if len(estimates) == 1:
        return first.copy()
    w = fusion_weights(estimates, bandwidth)
    # written as offsets from the first estimate so identical inputs come back bit-exact
    coeffs = first.coeffs + sum(wj * (e.coeffs - first.coeffs) for wj, e in zip(w, estimates))
    activity = first.activity + sum(wj * (e.activity - first.activity) for wj, e in zip(w, estimates))
    return first.copy(coeffs=coeffs, activity=np.clip(activity, 0.0, 1.0))
