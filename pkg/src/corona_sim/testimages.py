"""Fetch the standard grayscale test images and convert them to 256x256 PGM.

The images are not shipped with the package. They are pulled from source
archives of PyPI projects that bundle them, which works anywhere a pip index
is reachable. Four of the eight classic images are not bundled by any
project we could find (House, Peppers, Living Room, Boat); stand-ins of
similar content are used and flagged in ``SOURCES``.

Run ``python -m corona_sim.testimages [DEST]`` to populate a directory.
"""

from __future__ import annotations

import io
import logging
import os
import re
import sys
import tarfile
import tempfile
import urllib.parse
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .denoise.pgm import read_pgm, write_pgm

log = logging.getLogger(__name__)

SIZE = 256
INDEX_URL = os.environ.get("PIP_INDEX_URL", "https://pypi.org/simple")
DEFAULT_DIR = Path(os.environ.get("CORONA_SIM_IMAGES", Path(__file__).resolve().parents[2] / "data" / "images"))


@dataclass(frozen=True)
class Source:
    project: str
    archive: str
    member: str
    standin: bool = False


SOURCES: dict[str, Source] = {
    "cameraman": Source("bm3d", "bm3d-4.0.3.tar.gz", "bm3d-4.0.3/examples/cameraman256.png"),
    "lena": Source("scikit-image", "scikit-image-0.10.1.tar.gz", "scikit-image-0.10.1/skimage/data/lena.png"),
    "barbara": Source("sporco", "sporco-0.2.1.tar.gz", "sporco-0.2.1/sporco/data/barbara.png"),
    "house": Source("opencv-python", "opencv-python-4.9.0.80.tar.gz",
                    "opencv-python-4.9.0.80/opencv/samples/data/building.jpg", standin=True),
    "peppers": Source("opencv-python", "opencv-python-4.9.0.80.tar.gz",
                      "opencv-python-4.9.0.80/opencv/samples/data/fruits.jpg", standin=True),
    "living_room": Source("opencv-python", "opencv-python-4.9.0.80.tar.gz",
                          "opencv-python-4.9.0.80/opencv/samples/data/stuff.jpg", standin=True),
    "boat": Source("sporco", "sporco-0.2.1.tar.gz", "sporco-0.2.1/sporco/data/sail.png", standin=True),
    "mandrill": Source("opencv-python", "opencv-python-4.9.0.80.tar.gz",
                       "opencv-python-4.9.0.80/opencv/samples/data/baboon.jpg"),
}

NAMES = tuple(SOURCES)


def _archive_url(project: str, archive: str) -> str:
    index = INDEX_URL.rstrip("/") + f"/{project}/"
    with urllib.request.urlopen(index, timeout=60) as resp:
        page = resp.read().decode()
    m = re.search(r'href="([^"]*/' + re.escape(archive) + r')[#"]', page)
    if not m:
        raise FileNotFoundError(f"{archive} not listed on {index}")
    return urllib.parse.urljoin(index, m.group(1))


def _download(project: str, archive: str, cache: Path) -> Path:
    target = cache / archive
    if not target.exists():
        url = _archive_url(project, archive)
        log.info("downloading %s", url)
        fd, tmp = tempfile.mkstemp(dir=cache, suffix=".part")
        with os.fdopen(fd, "wb") as out, urllib.request.urlopen(url, timeout=600) as resp:
            while chunk := resp.read(1 << 20):
                out.write(chunk)
        os.replace(tmp, target)
    return target


def to_gray_square(data: bytes, size: int = SIZE) -> np.ndarray:
    """Decode, convert to luma, centre-crop to a square and resample to ``size``."""
    from PIL import Image

    im = Image.open(io.BytesIO(data)).convert("L")
    w, h = im.size
    s = min(w, h)
    left, top = (w - s) // 2, (h - s) // 2
    im = im.crop((left, top, left + s, top + s))
    if s != size:
        im = im.resize((size, size), Image.Resampling.LANCZOS)
    return np.asarray(im, dtype=np.uint8)


def fetch(names=NAMES, dest: str | Path = DEFAULT_DIR, cache: str | Path | None = None) -> dict[str, Path]:
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    cache = Path(cache) if cache else dest / ".cache"
    cache.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name in names:
        path = dest / f"{name}.pgm"
        if not path.exists():
            src = SOURCES[name]
            archive = _download(src.project, src.archive, cache)
            with tarfile.open(archive) as tf:
                data = tf.extractfile(src.member).read()
            write_pgm(path, to_gray_square(data))
        paths[name] = path
    return paths


def load(name: str, dest: str | Path = DEFAULT_DIR) -> np.ndarray:
    path = Path(dest) / f"{name}.pgm"
    if not path.exists():
        fetch([name], dest)
    return read_pgm(path)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    argv = sys.argv[1:] if argv is None else argv
    dest = Path(argv[0]) if argv else DEFAULT_DIR
    for name, path in fetch(NAMES, dest).items():
        flag = " (stand-in)" if SOURCES[name].standin else ""
        print(f"{name:12s} {path}{flag}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
