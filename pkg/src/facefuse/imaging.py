"""Grayscale image ingestion: PGM reading/writing, bilinear resizing, flattening.

Images are immutable :class:`GrayImage` values holding a float64 array of
shape (height, width) with intensities in [0, 1] after loading.  The PGM
reader accepts both ASCII (P2) and binary (P5) graymaps with maxval up to
65535; the writer emits binary P5.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import PgmDataError, PgmHeaderError, PgmMaxvalError

MAX_MAXVAL = 65535


@dataclass(frozen=True)
class GrayImage:
    """Row-major grayscale raster with real-valued pixels.

    ``pixels`` has shape (height, width) and is frozen after construction,
    so instances are safe to share between threads.
    """

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"pixels must be a 2-D array with positive dimensions, got shape {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def from_vector(vec, width: int, height: int) -> GrayImage:
    """Reshape a row-major vector of length width*height back into an image."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.size != width * height:
        raise ValueError(f"vector length {vec.size} does not match {width}x{height}")
    return GrayImage(vec.reshape(height, width).copy())


def flatten(img: GrayImage) -> np.ndarray:
    """Row-major vectorization: element k is the pixel at (k // width, k % width)."""
    return img.pixels.ravel().copy()


_TOKEN_RE = re.compile(rb"\S+")


def _read_header_tokens(data: bytes, count: int):
    """Pull `count` whitespace-separated tokens off `data`, skipping # comments.

    Returns (tokens, offset_past_last_token).
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PgmHeaderError("unexpected end of file while reading header")
        if data[pos:pos + 1] == b"#":
            eol = data.find(b"\n", pos)
            if eol == -1:
                raise PgmHeaderError("unterminated comment in header")
            pos = eol + 1
            continue
        m = _TOKEN_RE.match(data, pos)
        tokens.append(m.group(0))
        pos = m.end()
    return tokens, pos


def load_pgm(path) -> GrayImage:
    """Load a P2 (ASCII) or P5 (binary) portable graymap.

    Pixels are scaled to [0, 1] by dividing by the header maxval.  Raises
    FileNotFoundError for a missing file, PgmHeaderError/PgmMaxvalError for a
    bad header, and PgmDataError for truncated or excess pixel data.
    """
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:2] not in (b"P2", b"P5"):
        raise PgmHeaderError(f"{path}: not a P2/P5 graymap")
    magic = data[:2]
    try:
        tokens, pos = _read_header_tokens(data[2:], 3)
    except PgmHeaderError as exc:
        raise PgmHeaderError(f"{path}: {exc}") from None
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise PgmHeaderError(f"{path}: non-numeric header fields {tokens}") from None
    if width < 1 or height < 1:
        raise PgmHeaderError(f"{path}: invalid dimensions {width}x{height}")
    if maxval == 0:
        raise PgmMaxvalError(f"{path}: maxval is zero")
    if maxval > MAX_MAXVAL:
        raise PgmMaxvalError(f"{path}: maxval {maxval} exceeds {MAX_MAXVAL}")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from raster data
        raster = data[2 + pos + 1:]
        dtype = ">u2" if maxval > 255 else np.uint8
        itemsize = 2 if maxval > 255 else 1
        if len(raster) < count * itemsize:
            raise PgmDataError(f"{path}: expected {count} samples, raster holds {len(raster) // itemsize}")
        samples = np.frombuffer(raster[: count * itemsize], dtype=dtype).astype(np.float64)
    else:
        body = data[2 + pos:]
        # comments are tolerated inside the ASCII raster as well
        body = re.sub(rb"#[^\n]*", b"", body)
        fields = body.split()
        if len(fields) != count:
            raise PgmDataError(f"{path}: expected {count} samples, found {len(fields)}")
        try:
            samples = np.array([int(f) for f in fields], dtype=np.float64)
        except ValueError:
            raise PgmDataError(f"{path}: non-numeric sample in raster") from None
    if samples.max(initial=0.0) > maxval:
        raise PgmDataError(f"{path}: sample exceeds maxval {maxval}")
    return GrayImage((samples / maxval).reshape(height, width))


def save_pgm(img: GrayImage, path, maxval: int = 255) -> None:
    """Write a binary (P5) graymap, quantizing [0, 1] pixels to maxval steps."""
    if not 1 <= maxval <= MAX_MAXVAL:
        raise PgmMaxvalError(f"maxval {maxval} out of range 1..{MAX_MAXVAL}")
    q = np.rint(np.clip(img.pixels, 0.0, 1.0) * maxval)
    dtype = ">u2" if maxval > 255 else np.uint8
    header = f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii")
    Path(path).write_bytes(header + q.astype(dtype).tobytes())


def resize(img: GrayImage, new_width: int, new_height: int) -> GrayImage:
    """Bilinear resize with sample centers aligned and edges clamped.

    Source coordinate for output index i is (i + 0.5) * src/dst - 0.5,
    clamped into the source raster, so resizing to the same dimensions is an
    exact identity and constant images stay constant.
    """
    if new_width < 1 or new_height < 1:
        raise ValueError(f"target dimensions must be positive, got {new_width}x{new_height}")
    if new_width == img.width and new_height == img.height:
        return GrayImage(img.pixels.copy())

    src = img.pixels

    def axis_coords(dst_n, src_n):
        x = (np.arange(dst_n) + 0.5) * (src_n / dst_n) - 0.5
        x = np.clip(x, 0.0, src_n - 1.0)
        lo = np.floor(x).astype(np.intp)
        hi = np.minimum(lo + 1, src_n - 1)
        return lo, hi, x - lo

    cx0, cx1, fx = axis_coords(new_width, img.width)
    ry0, ry1, fy = axis_coords(new_height, img.height)

    # v0 + f*(v1 - v0) keeps constants bit-exact
    top = src[np.ix_(ry0, cx0)]
    top = top + fx[None, :] * (src[np.ix_(ry0, cx1)] - top)
    bot = src[np.ix_(ry1, cx0)]
    bot = bot + fx[None, :] * (src[np.ix_(ry1, cx1)] - bot)
    return GrayImage(top + fy[:, None] * (bot - top))


def clip01(img: GrayImage) -> GrayImage:
    """Clamp pixels into [0, 1]."""
    return GrayImage(np.clip(img.pixels, 0.0, 1.0))
