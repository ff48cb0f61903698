"""Orthonormal periodised 2-D Daubechies wavelet transform.

Coefficients are kept in Mallat layout: one array the size of the input,
with the coarsest approximation band in the top-left corner.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np


@lru_cache(maxsize=None)
def daubechies(moments: int) -> np.ndarray:
    """Minimum-phase Daubechies scaling filter with ``moments`` vanishing moments.

    Built by spectral factorisation of the half-band polynomial; returns
    ``2 * moments`` taps normalised to sum to sqrt(2).
    """
    if moments < 1:
        raise ValueError("moments must be >= 1")
    p = moments
    # P(y) = sum C(p-1+k, k) y^k with y = sin^2(w/2)
    coeffs = [comb(p - 1 + k, k) for k in range(p)]
    y_roots = np.roots(coeffs[::-1]) if p > 1 else np.array([])
    h = np.array([1.0 + 0j])
    for yr in y_roots:
        # y = (2 - z - 1/z)/4  ->  z^2 - (2 - 4y) z + 1 = 0; keep the root inside the unit circle
        z = np.roots([1.0, -(2.0 - 4.0 * yr), 1.0])
        zr = z[np.argmin(np.abs(z))]
        h = np.convolve(h, [1.0, -zr])
    for _ in range(p):
        h = np.convolve(h, [1.0, 1.0])
    h = np.real(h)
    return h * (np.sqrt(2.0) / h.sum())


def highpass(lo: np.ndarray) -> np.ndarray:
    n = lo.size
    return np.array([(-1) ** k * lo[n - 1 - k] for k in range(n)])


def _analysis_1d(x: np.ndarray, lo: np.ndarray, hi: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    half = n // 2
    idx = (2 * np.arange(half)[:, None] + np.arange(lo.size)[None, :]) % n
    taps = x[..., idx]  # (..., half, L)
    a = taps @ lo
    d = taps @ hi
    return np.moveaxis(a, -1, axis), np.moveaxis(d, -1, axis)


def _synthesis_1d(a: np.ndarray, d: np.ndarray, lo: np.ndarray, hi: np.ndarray, axis: int) -> np.ndarray:
    a = np.moveaxis(a, axis, -1)
    d = np.moveaxis(d, axis, -1)
    half = a.shape[-1]
    n = 2 * half
    out = np.zeros(a.shape[:-1] + (n,))
    for k in range(lo.size):
        pos = (2 * np.arange(half) + k) % n
        # positions are distinct for fixed k, so fancy-index accumulation is safe
        out[..., pos] += lo[k] * a + hi[k] * d
    return np.moveaxis(out, -1, axis)


@dataclass
class CoeffSet:
    coeffs: np.ndarray
    depth: int
    activity: np.ndarray | None = None
    sigma: float | None = None
    moments: int = 2
    shape: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.activity is None:
            self.activity = np.ones_like(self.coeffs)
        if self.shape is None:
            self.shape = self.coeffs.shape

    @property
    def approx_shape(self) -> tuple[int, int]:
        h, w = self.coeffs.shape
        return h >> self.depth, w >> self.depth

    def detail_mask(self) -> np.ndarray:
        mask = np.ones(self.coeffs.shape, dtype=bool)
        ah, aw = self.approx_shape
        mask[:ah, :aw] = False
        return mask

    def finest_details(self) -> np.ndarray:
        """Coefficients of the three finest-scale detail bands."""
        h, w = self.coeffs.shape
        c = self.coeffs
        return np.concatenate([c[: h // 2, w // 2 :].ravel(), c[h // 2 :, : w // 2].ravel(),
                               c[h // 2 :, w // 2 :].ravel()])

    def copy(self, **changes) -> "CoeffSet":
        fields = dict(coeffs=self.coeffs.copy(), depth=self.depth, activity=self.activity.copy(),
                      sigma=self.sigma, moments=self.moments, shape=self.shape)
        fields.update(changes)
        return CoeffSet(**fields)


def _pad(image: np.ndarray, depth: int) -> np.ndarray:
    block = 1 << depth
    h, w = image.shape
    ph, pw = (-h) % block, (-w) % block
    if ph or pw:
        image = np.pad(image, ((0, ph), (0, pw)), mode="symmetric")
    return image


def forward_transform(image, depth: int = 3, moments: int = 2) -> CoeffSet:
    """Multilevel separable DWT. Inputs not divisible by ``2**depth`` are
    symmetrically padded; the original shape is kept for the inverse."""
    x = np.asarray(getattr(image, "data", image), dtype=np.float64)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("expected a non-empty 2-D image")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    shape = x.shape
    x = _pad(x, depth)
    lo = daubechies(moments)
    hi = highpass(lo)
    out = x.copy()
    h, w = x.shape
    for _ in range(depth):
        band = out[:h, :w]
        a, d = _analysis_1d(band, lo, hi, axis=1)
        rows = np.concatenate([a, d], axis=1)
        a, d = _analysis_1d(rows, lo, hi, axis=0)
        out[:h, :w] = np.concatenate([a, d], axis=0)
        h, w = h // 2, w // 2
    return CoeffSet(out, depth, moments=moments, shape=shape)


def inverse_transform(cs: CoeffSet) -> np.ndarray:
    lo = daubechies(cs.moments)
    hi = highpass(lo)
    out = cs.coeffs.astype(np.float64, copy=True)
    H, W = out.shape
    for level in range(cs.depth - 1, -1, -1):
        h, w = H >> level, W >> level
        band = out[:h, :w]
        rows = _synthesis_1d(band[: h // 2], band[h // 2 :], lo, hi, axis=0)
        out[:h, :w] = _synthesis_1d(rows[:, : w // 2], rows[:, w // 2 :], lo, hi, axis=1)
    sh, sw = cs.shape
    return out[:sh, :sw]
