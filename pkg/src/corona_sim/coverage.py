"""Disk coverage model and grid-sampled coverage rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class SensorDisk:
    x: float
    y: float
    h: float

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("sensing radius must be positive")


@dataclass(frozen=True)
class CoverageReport:
    coverage_rate: float
    resolution: float
    covered: int
    total: int


def point_covered(point: tuple[float, float], node: SensorDisk) -> int:
    a, b = point
    return int((a - node.x) ** 2 + (b - node.y) ** 2 <= node.h**2)


def p_miss(point: tuple[float, float], node: SensorDisk) -> float:
    """Probability that ``node`` fails to cover ``point``."""
    return 1.0 - point_covered(point, node)


def p_union(point: tuple[float, float], nodes: Sequence[SensorDisk]) -> float:
    """Probability that at least one node covers ``point``."""
    if not nodes:
        raise ValueError("node set must be non-empty")
    miss = 1.0
    for n in nodes:
        miss *= p_miss(point, n)
    return 1.0 - miss


def p_union_grid(xs: np.ndarray, ys: np.ndarray, nodes: Sequence[SensorDisk]) -> np.ndarray:
    """Vectorised union probability over arrays of sample points."""
    miss = np.ones(np.broadcast(xs, ys).shape)
    for n in nodes:
        inside = (xs - n.x) ** 2 + (ys - n.y) ** 2 <= n.h**2
        miss = miss * (1.0 - inside)
    return 1.0 - miss


def grid_axis(radius: float, resolution: float) -> np.ndarray:
    """Cell-centre sample coordinates spanning [-radius, radius]."""
    n = math.ceil(2 * radius / resolution)
    return -radius + (np.arange(n) + 0.5) * resolution


def field_mask(radius: float, resolution: float) -> np.ndarray:
    ax = grid_axis(radius, resolution)
    return (ax[None, :] ** 2 + ax[:, None] ** 2) <= radius**2


def coverage_mask(nodes: Iterable[SensorDisk], radius: float, resolution: float) -> np.ndarray:
    """Boolean grid (rows = y) of field samples covered by any disk."""
    return CoverageTracker(list(nodes), radius, resolution).mask


def coverage_rate(nodes: Iterable[SensorDisk], radius: float, resolution: float = 0.5) -> CoverageReport:
    """Covered fraction of the field disk, sampled on a square grid."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    if resolution > radius:
        raise ValueError("resolution larger than the field radius")
    tracker = CoverageTracker(list(nodes), radius, resolution)
    return CoverageReport(tracker.covered / tracker.total, resolution, tracker.covered, tracker.total)


def write_pgm_mask(path, mask: np.ndarray) -> None:
    from .denoise.pgm import write_pgm

    write_pgm(path, np.where(mask, 255, 0).astype(np.uint8))


class CoverageTracker:
    """Incremental coverage rate for a fixed set of disks as they switch off.

    Keeps a per-sample count of covering disks, so removing a node only
    touches its own bounding box.
    """

    def __init__(self, disks: Sequence[SensorDisk], radius: float, resolution: float = 0.5):
        if not 0 < resolution <= radius:
            raise ValueError("resolution must lie in (0, radius]")
        self.radius = radius
        self.resolution = resolution
        self._ax = grid_axis(radius, resolution)
        self._inside = field_mask(radius, resolution)
        self.total = int(self._inside.sum())
        self._count = np.zeros(self._inside.shape, dtype=np.int32)
        self._boxes = [self._box(d) for d in disks]
        for box in self._boxes:
            if box is not None:
                sl, hit = box
                self._count[sl] += hit
        self.covered = int(((self._count > 0) & self._inside).sum())
        self._active = [True] * len(disks)

    def _box(self, d: SensorDisk):
        n, r, res = self._ax.size, self.radius, self.resolution
        lo_x = max(0, int(math.floor((d.x - d.h + r) / res - 0.5)))
        hi_x = min(n, int(math.ceil((d.x + d.h + r) / res - 0.5)) + 1)
        lo_y = max(0, int(math.floor((d.y - d.h + r) / res - 0.5)))
        hi_y = min(n, int(math.ceil((d.y + d.h + r) / res - 0.5)) + 1)
        if lo_x >= hi_x or lo_y >= hi_y:
            return None
        gx, gy = self._ax[lo_x:hi_x], self._ax[lo_y:hi_y]
        hit = (gx[None, :] - d.x) ** 2 + (gy[:, None] - d.y) ** 2 <= d.h**2
        hit &= self._inside[lo_y:hi_y, lo_x:hi_x]
        return (slice(lo_y, hi_y), slice(lo_x, hi_x)), hit.astype(np.int32)

    def remove(self, index: int) -> None:
        if not self._active[index]:
            return
        self._active[index] = False
        box = self._boxes[index]
        if box is None:
            return
        sl, hit = box
        region = self._count[sl]
        lost = int(((region == 1) & (hit == 1)).sum())
        region -= hit
        self.covered -= lost

    @property
    def mask(self) -> np.ndarray:
        return (self._count > 0) & self._inside

    @property
    def rate(self) -> float:
        return self.covered / self.total
