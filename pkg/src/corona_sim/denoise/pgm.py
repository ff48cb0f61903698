"""Binary PGM (P5, 8-bit) reading and writing."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np


class PGMError(ValueError):
    pass


def _tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated header tokens and the offset after them."""
    tokens, i, n = [], 0, len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i : i + 1] == b"#":
            while i < n and data[i : i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i : i + 1] != b"#":
            i += 1
        if start == i:
            raise PGMError("truncated header")
        tokens.append(data[start:i])
    return tokens, i


def decode_pgm(data: bytes) -> np.ndarray:
    tokens, end = _tokens(data, 4)
    if tokens[0] != b"P5":
        raise PGMError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PGMError("non-integer header field") from None
    if width <= 0 or height <= 0:
        raise PGMError("zero-sized image")
    if not 0 < maxval <= 255:
        raise PGMError(f"only 8-bit PGM is supported (maxval {maxval})")
    # exactly one whitespace byte separates the header from the raster
    raster = data[end + 1 : end + 1 + width * height]
    if len(raster) != width * height:
        raise PGMError("truncated raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def encode_pgm(image: np.ndarray) -> bytes:
    arr = np.asarray(image)
    if arr.ndim != 2 or arr.size == 0:
        raise PGMError("expected a non-empty 2-D array")
    if arr.dtype != np.uint8:
        arr = quantize(arr)
    h, w = arr.shape
    return b"P5\n%d %d\n255\n" % (w, h) + arr.tobytes()


def quantize(image: np.ndarray) -> np.ndarray:
    """Round and clip real intensities to 8 bits."""
    return np.clip(np.rint(np.asarray(image, dtype=np.float64)), 0, 255).astype(np.uint8)


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    return decode_pgm(Path(path).read_bytes())


def write_pgm(path: str | os.PathLike, image: np.ndarray) -> None:
    """Write atomically: the target either holds the full file or is untouched."""
    path = Path(path)
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(encode_pgm(image))
    os.replace(tmp, path)
