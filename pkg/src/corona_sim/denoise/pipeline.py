"""End-to-end collaborative denoising of several noisy receptions of one image.

Defaults come from a small grid search over four test images and four noise
levels (see docs/tuning.md).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .image import ImageBuffer
from .nlm import patch_average
from .sparse import collaborative_fuse, estimate_sigma, fusion_weights, shrink
from .wavelet import forward_transform, inverse_transform

DEFAULT_DEPTH = 3
DEFAULT_MOMENTS = 2
DEFAULT_PATCH = 7
DEFAULT_WINDOW = 21
SHRINK_RULE = "gain"
SHRINK_LAMBDA = 1.0
H_SIM_FACTOR = 0.6


@dataclass
class DenoiseResult:
    partial: np.ndarray     # fused wavelet estimate, before the patch filter
    final: np.ndarray
    sigma: float            # noise level of each copy
    sigma_fused: float      # residual noise level after fusion
    weights: np.ndarray


def denoise_pipeline(noisy_copies: Sequence, sigma: float | None = None, *,
                     depth: int = DEFAULT_DEPTH, moments: int = DEFAULT_MOMENTS,
                     patch: int = DEFAULT_PATCH, window: int = DEFAULT_WINDOW,
                     rule: str = SHRINK_RULE, lam: float = SHRINK_LAMBDA,
                     h_factor: float = H_SIM_FACTOR, bandwidth: float | None = None,
                     return_stages: bool = False):
    """Transform, shrink, fuse, invert, then patch-average.

    ``sigma=None`` estimates the noise level from the first copy. The patch
    filter strength is ``h_factor`` times the noise left after fusion, which
    for weights ``w`` is ``sigma * ||w||_2``. With zero noise the input is
    passed through untouched by both filters.
    """
    if len(noisy_copies) == 0:
        raise ValueError("need at least one noisy copy")
    coeffs = [forward_transform(c, depth, moments) for c in noisy_copies]
    if sigma is None:
        sigma = estimate_sigma(coeffs[0])
    if sigma <= 0:
        weights = np.full(len(coeffs), 1.0 / len(coeffs))
        partial = inverse_transform(collaborative_fuse(coeffs, 1.0))
        final, sigma_fused = partial, 0.0
    else:
        shrunk = [shrink(c, sigma, rule, lam) for c in coeffs]
        bw = bandwidth if bandwidth is not None else sigma
        weights = fusion_weights(shrunk, bw) if len(shrunk) > 1 else np.ones(1)
        sigma_fused = sigma * math.sqrt(float(np.sum(weights**2)))
        partial = inverse_transform(collaborative_fuse(shrunk, bw))
        final = patch_average(partial, patch, window, h_factor * sigma_fused)
    if return_stages:
        return DenoiseResult(partial, final, float(sigma), sigma_fused, weights)
    return ImageBuffer(final)
