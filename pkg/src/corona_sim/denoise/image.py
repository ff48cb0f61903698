from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pgm import quantize, read_pgm, write_pgm


@dataclass
class ImageBuffer:
    """Real-valued grayscale image on the nominal 0-255 scale."""

    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2 or self.data.size == 0:
            raise ValueError("ImageBuffer needs a non-empty 2-D array")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_pgm(cls, path) -> "ImageBuffer":
        return cls(read_pgm(path))

    def to_pgm(self, path) -> None:
        write_pgm(path, quantize(self.data))

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)
