"""Similar-patch weighted averaging (non-local means on a search window)."""

from __future__ import annotations

import numpy as np


def _box_mean(img: np.ndarray, size: int) -> np.ndarray:
    """Mean over ``size x size`` windows of a padded image ('valid' output).

    Direct separable sums rather than a summed-area table: the table's running
    totals lose precision on large images.
    """
    h, w = img.shape[0] - size + 1, img.shape[1] - size + 1
    rows = img[:, :w].copy()
    for k in range(1, size):
        rows += img[:, k : k + w]
    out = rows[:h].copy()
    for k in range(1, size):
        out += rows[k : k + h]
    return out / (size * size)


def _check(shape, patch: int, window: int) -> None:
    if patch < 1 or patch % 2 == 0:
        raise ValueError("patch must be a positive odd size")
    if window % 2 == 0 or window <= patch:
        raise ValueError("window must be odd and larger than the patch")
    if min(shape) <= window:
        raise ValueError("image must be larger than the search window")


def patch_average(image, patch: int = 7, window: int = 21, h_sim: float = 10.0) -> np.ndarray:
    """Replace each pixel by a weighted mean of the pixels in its search window.

    A candidate's weight is ``exp(-mse / h_sim**2)`` where ``mse`` is the mean
    squared difference between the patch around it and the patch around the
    target pixel. Borders are handled by reflection.
    """
    x = np.asarray(getattr(image, "data", image), dtype=np.float64)
    _check(x.shape, patch, window)
    if not h_sim > 0:
        raise ValueError("h_sim must be positive")
    H, W = x.shape
    pr, wr = patch // 2, window // 2
    pad = pr + wr
    xp = np.pad(x, pad, mode="reflect")
    core = xp[wr : wr + H + 2 * pr, wr : wr + W + 2 * pr]
    num = np.zeros((H, W))
    den = np.zeros((H, W))
    inv = 1.0 / (h_sim * h_sim)
    for dy in range(-wr, wr + 1):
        for dx in range(-wr, wr + 1):
            shifted = xp[wr + dy : wr + dy + H + 2 * pr, wr + dx : wr + dx + W + 2 * pr]
            mse = _box_mean((core - shifted) ** 2, patch)
            w = np.exp(-mse * inv)
            num += w * shifted[pr : pr + H, pr : pr + W]
            den += w
    return num / den


def patch_average_bruteforce(image, patch: int, window: int, h_sim: float) -> np.ndarray:
    """Direct per-pixel evaluation of :func:`patch_average`, for small images."""
    x = np.asarray(image, dtype=np.float64)
    _check(x.shape, patch, window)
    H, W = x.shape
    pr, wr = patch // 2, window // 2
    xp = np.pad(x, pr + wr, mode="reflect")
    out = np.empty_like(x)
    for i in range(H):
        for j in range(W):
            ci, cj = i + pr + wr, j + pr + wr
            ref = xp[ci - pr : ci + pr + 1, cj - pr : cj + pr + 1]
            num = den = 0.0
            for dy in range(-wr, wr + 1):
                for dx in range(-wr, wr + 1):
                    qi, qj = ci + dy, cj + dx
                    cand = xp[qi - pr : qi + pr + 1, qj - pr : qj + pr + 1]
                    w = np.exp(-np.mean((ref - cand) ** 2) / h_sim**2)
                    num += w * xp[qi, qj]
                    den += w
            out[i, j] = num / den
    return out
