"""AWGN corruption on the wireless link and a statistical check that linear
aggregation of Gaussian readings stays Gaussian."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .denoise.image import ImageBuffer


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be a finite non-negative number")


def add_awgn(clean, spec: NoiseSpec, rng: np.random.Generator | None = None) -> ImageBuffer:
    """``clean + n`` with i.i.d. N(0, sigma^2) entries; no clipping."""
    x = np.asarray(getattr(clean, "data", clean), dtype=np.float64)
    if spec.sigma == 0:
        return ImageBuffer(x.copy())
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    return ImageBuffer(x + rng.normal(0.0, spec.sigma, size=x.shape))


def noisy_copies(clean, sigma: float, copies: int, seed: int = 0) -> list[ImageBuffer]:
    """Independent corrupted receptions of the same reading, one child stream each."""
    children = np.random.SeedSequence(seed).spawn(copies)
    return [add_awgn(clean, NoiseSpec(sigma), np.random.default_rng(c)) for c in children]


@dataclass(frozen=True)
class GaussianMixInput:
    rho: float
    delta: float
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.rho > 0 and self.delta > 0):
            raise ValueError("rho and delta must be positive")
        if self.samples < 10_000:
            raise ValueError("need at least 10^4 samples")


@dataclass(frozen=True)
class Lemma1Report:
    variance: float
    expected_variance: float
    ci_low: float
    ci_high: float
    ks_statistic: float
    ks_pvalue: float
    passed: bool


def variance_ci(n: int, variance: float, level: float = 0.99) -> tuple[float, float]:
    """Interval that holds the sample variance of ``n`` N(0, variance) draws
    with probability ``level`` (chi-square with n-1 degrees of freedom)."""
    alpha = 1.0 - level
    lo = stats.chi2.ppf(alpha / 2, n - 1) / (n - 1)
    hi = stats.chi2.ppf(1 - alpha / 2, n - 1) / (n - 1)
    return variance * lo, variance * hi


def mix_gaussians(inp: GaussianMixInput) -> np.ndarray:
    rng = np.random.default_rng(inp.seed)
    p = rng.standard_normal(inp.samples)
    q = rng.standard_normal(inp.samples)
    return inp.rho * p + inp.delta * q


def check_gaussian(z: np.ndarray, variance: float, alpha: float = 0.01) -> Lemma1Report:
    n = z.size
    lo, hi = variance_ci(n, variance, 1.0 - alpha)
    var = float(np.var(z, ddof=1))
    ks = stats.kstest(z, "norm", args=(0.0, math.sqrt(variance)))
    ok = lo <= var <= hi and ks.pvalue >= alpha
    return Lemma1Report(var, variance, lo, hi, float(ks.statistic), float(ks.pvalue), bool(ok))


def verify_lemma1(inp: GaussianMixInput, alpha: float = 0.01) -> Lemma1Report:
    """Draw ``Z = rho*P + delta*Q`` and test it against N(0, rho^2 + delta^2)."""
    return check_gaussian(mix_gaussians(inp), inp.rho**2 + inp.delta**2, alpha)
