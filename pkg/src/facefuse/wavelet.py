"""Orthonormal 4-tap Daubechies (db2) discrete wavelet transform.

1-D and separable 2-D forward/inverse transforms, multilevel to a
configurable depth (default 5).  Subbands are plain float64 arrays of shape
(height, width); a multilevel decomposition is a :class:`WaveletPyramid`
with explicit size bookkeeping so non-power-of-two rasters invert exactly.

Normative convention: a signal of odd length is first padded by replicating
its edge sample, then treated as periodic; analysis output sample k gathers
the four taps at positions 2k .. 2k+3 of that padded signal (indices taken
mod its even length).  Each subband therefore holds ceil(n/2) coefficients
and the transform reconstructs to machine precision at every size >= 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeMismatchError
from .imaging import GrayImage, save_pgm

DEFAULT_LEVELS = 5
_TAPS = 4


@dataclass(frozen=True)
class FilterBank:
    """Analysis/synthesis taps of an orthonormal two-channel filter bank."""

    low_analysis: np.ndarray
    high_analysis: np.ndarray
    low_synthesis: np.ndarray
    high_synthesis: np.ndarray

    def __post_init__(self):
        for name in ("low_analysis", "high_analysis", "low_synthesis", "high_synthesis"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def db2_filters() -> FilterBank:
    """Standard db2 taps: low_analysis sums to sqrt(2), high taps are its
    alternating-sign reversal, synthesis taps are the time-reversed pair."""
    s3 = np.sqrt(3.0)
    low = np.array([1.0 + s3, 3.0 + s3, 3.0 - s3, 1.0 - s3]) / (4.0 * np.sqrt(2.0))
    high = np.array([low[3], -low[2], low[1], -low[0]])
    return FilterBank(low, high, low[::-1].copy(), high[::-1].copy())


def _padded_length(n: int) -> int:
    return n + (n & 1)


def _gather_index(n: int) -> np.ndarray:
    """(m, 4) index table: output k reads padded positions (2k + j) mod N."""
    N = _padded_length(n)
    m = N // 2
    return (2 * np.arange(m)[:, None] + np.arange(_TAPS)[None, :]) % N


def _analyze(rows: np.ndarray, bank: FilterBank):
    """Run the forward step along axis 1 of a (batch, n) array."""
    n = rows.shape[1]
    if n & 1:
        rows = np.concatenate([rows, rows[:, -1:]], axis=1)
    idx = _gather_index(n)
    windows = rows[:, idx]  # (batch, m, 4)
    return windows @ bank.low_analysis, windows @ bank.high_analysis


def _synthesize(approx: np.ndarray, detail: np.ndarray, bank: FilterBank, n: int) -> np.ndarray:
    """Invert _analyze along axis 1, truncating to the recorded length n."""
    batch, m = approx.shape
    N = _padded_length(n)
    idx = _gather_index(n)
    # scatter form of convolving the upsampled subbands with the synthesis taps
    lo_k = bank.low_synthesis[::-1]
    hi_k = bank.high_synthesis[::-1]
    contrib = approx[:, :, None] * lo_k[None, None, :] + detail[:, :, None] * hi_k[None, None, :]
    out = np.zeros((batch, N))
    np.add.at(out, (np.arange(batch)[:, None, None], idx[None, :, :]), contrib)
    return out[:, :n]


def dwt1d(signal, bank: FilterBank):
    """One forward step on a 1-D signal; returns (approx, detail) of length ceil(n/2)."""
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1 or signal.size == 0:
        raise ValueError("signal must be a non-empty 1-D array")
    lo, hi = _analyze(signal[None, :], bank)
    return lo[0], hi[0]


def idwt1d(approx, detail, bank: FilterBank, original_length: int):
    """Invert one dwt1d step, truncating to original_length samples."""
    approx = np.asarray(approx, dtype=np.float64)
    detail = np.asarray(detail, dtype=np.float64)
    if approx.shape != detail.shape or approx.ndim != 1:
        raise ValueError(f"approx/detail lengths differ: {approx.shape} vs {detail.shape}")
    if original_length < 1:
        raise ValueError("original_length must be >= 1")
    if approx.size != _padded_length(original_length) // 2:
        raise ValueError(
            f"subband length {approx.size} inconsistent with original_length {original_length}"
        )
    return _synthesize(approx[None, :], detail[None, :], bank, original_length)[0]


def dwt2d_step(img: np.ndarray, bank: FilterBank):
    """Separable forward step: rows then columns.

    Returns (ll, lh, hl, hh) where lh is the horizontal detail (row-lowpass,
    column-highpass), hl the vertical detail, hh the diagonal.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError("expected a non-empty 2-D array")
    row_lo, row_hi = _analyze(img, bank)
    ll, lh = _analyze(np.ascontiguousarray(row_lo.T), bank)
    hl, hh = _analyze(np.ascontiguousarray(row_hi.T), bank)
    return ll.T, lh.T, hl.T, hh.T


def idwt2d_step(ll, lh, hl, hh, bank: FilterBank, size) -> np.ndarray:
    """Invert dwt2d_step back to a (height, width) array of the given size."""
    width, height = size
    row_lo = _synthesize(np.ascontiguousarray(ll.T), np.ascontiguousarray(lh.T), bank, height).T
    row_hi = _synthesize(np.ascontiguousarray(hl.T), np.ascontiguousarray(hh.T), bank, height).T
    return _synthesize(np.ascontiguousarray(row_lo), np.ascontiguousarray(row_hi), bank, width)


def max_levels(width: int, height: int) -> int:
    """Depth at which the coarsest approximation reaches 1x1 under ceil-halving."""
    w, h, count = width, height, 0
    while max(w, h) > 1:
        w, h = (w + 1) // 2, (h + 1) // 2
        count += 1
    return max(count, 1)


@dataclass(frozen=True)
class WaveletPyramid:
    """Multilevel 2-D decomposition with explicit size bookkeeping.

    ``details[i]`` is the (lh, hl, hh) triplet of level i, finest first;
    ``approx`` is the coarsest LL.  ``level_sizes[i]`` records the (width,
    height) of the array that entered level i, so the inverse can truncate
    each stage exactly; ``subband_sizes[i]`` is its ceil-halved counterpart.
    """

    approx: np.ndarray
    details: tuple
    level_sizes: tuple
    subband_sizes: tuple

    @property
    def levels(self) -> int:
        return len(self.details)

    @property
    def original_size(self):
        return self.level_sizes[0]

    def validate(self) -> None:
        if self.levels < 1:
            raise ValueError("pyramid must have at least one level")
        if len(self.level_sizes) != self.levels or len(self.subband_sizes) != self.levels:
            raise ValueError("size bookkeeping does not match the number of levels")
        for i, ((w, h), (sw, sh)) in enumerate(zip(self.level_sizes, self.subband_sizes)):
            if (sw, sh) != ((w + 1) // 2, (h + 1) // 2):
                raise ValueError(f"level {i}: subband size {(sw, sh)} is not ceil-half of {(w, h)}")
            for band in self.details[i]:
                if band.shape != (sh, sw):
                    raise ValueError(f"level {i}: detail shape {band.shape} != recorded {(sh, sw)}")
            if i + 1 < self.levels and self.level_sizes[i + 1] != (sw, sh):
                raise ValueError(f"level {i + 1} input size {self.level_sizes[i + 1]} != {(sw, sh)}")
        if self.approx.shape != (self.subband_sizes[-1][1], self.subband_sizes[-1][0]):
            raise ValueError("approximation shape does not match the coarsest recorded size")

    def same_shape(self, other: "WaveletPyramid") -> bool:
        return (
            self.levels == other.levels
            and self.level_sizes == other.level_sizes
            and self.subband_sizes == other.subband_sizes
        )


def decompose(img: GrayImage, levels: int = DEFAULT_LEVELS, bank: FilterBank | None = None) -> WaveletPyramid:
    """Recursively split the LL band `levels` times (clamped so LL stays >= 1x1)."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    bank = bank or db2_filters()
    levels = min(levels, max_levels(img.width, img.height))

    ll = img.pixels
    details = []
    level_sizes = []
    subband_sizes = []
    for _ in range(levels):
        h, w = ll.shape
        level_sizes.append((w, h))
        subband_sizes.append(((w + 1) // 2, (h + 1) // 2))
        ll, lh, hl, hh = dwt2d_step(ll, bank)
        details.append((lh, hl, hh))
    return WaveletPyramid(ll, tuple(details), tuple(level_sizes), tuple(subband_sizes))


def reconstruct(pyr: WaveletPyramid, bank: FilterBank | None = None) -> GrayImage:
    """Invert decompose level by level, truncating to the recorded sizes."""
    pyr.validate()
    bank = bank or db2_filters()
    ll = pyr.approx
    for level in range(pyr.levels - 1, -1, -1):
        lh, hl, hh = pyr.details[level]
        ll = idwt2d_step(ll, lh, hl, hh, bank, pyr.level_sizes[level])
    return GrayImage(ll)


def dump_pyramid_pgms(pyr: WaveletPyramid, out_dir) -> list:
    """Debug dump: one min-max normalized PGM per subband (not a round-trip format)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def norm(band):
        lo, hi = band.min(), band.max()
        scaled = np.zeros_like(band) if hi == lo else (band - lo) / (hi - lo)
        return GrayImage(scaled)

    written = []
    for i, (lh, hl, hh) in enumerate(pyr.details, start=1):
        for name, band in (("lh", lh), ("hl", hl), ("hh", hh)):
            path = out_dir / f"level{i}_{name}.pgm"
            save_pgm(norm(band), path)
            written.append(path)
    path = out_dir / f"level{pyr.levels}_ll.pgm"
    save_pgm(norm(pyr.approx), path)
    written.append(path)
    return written


def assert_same_shape(a: WaveletPyramid, b: WaveletPyramid) -> None:
    if not a.same_shape(b):
        raise ShapeMismatchError(
            f"pyramids differ: {a.levels} levels {a.level_sizes} vs {b.levels} levels {b.level_sizes}"
        )
