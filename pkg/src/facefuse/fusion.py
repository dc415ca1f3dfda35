"""Wavelet-domain fusion of a visual/thermal image pair.

Two same-shape pyramids are merged coefficient-wise: each output coefficient
is whichever input has the larger absolute value, sign preserved, with ties
going to the first (visual) argument.  By default the rule applies to the
approximation band as well as every detail band; ``fuse_approx=False``
switches the approximation to an element-wise mean while details stay
max-selected.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError
from .imaging import GrayImage, clip01
from .wavelet import (
    DEFAULT_LEVELS,
    FilterBank,
    WaveletPyramid,
    assert_same_shape,
    db2_filters,
    decompose,
    reconstruct,
)


def _max_magnitude(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(np.abs(a) >= np.abs(b), a, b)


def fuse_pyramids(a: WaveletPyramid, b: WaveletPyramid, fuse_approx: bool = True) -> WaveletPyramid:
    """Merge two same-shape pyramids by per-coefficient magnitude selection."""
    assert_same_shape(a, b)
    details = tuple(
        tuple(_max_magnitude(da, db) for da, db in zip(level_a, level_b))
        for level_a, level_b in zip(a.details, b.details)
    )
    if fuse_approx:
        approx = _max_magnitude(a.approx, b.approx)
    else:
        approx = (a.approx + b.approx) / 2.0
    return WaveletPyramid(approx, details, a.level_sizes, a.subband_sizes)


def fuse_images(
    visual: GrayImage,
    thermal: GrayImage,
    levels: int = DEFAULT_LEVELS,
    bank: FilterBank | None = None,
    fuse_approx: bool = True,
) -> GrayImage:
    """Decompose both images, fuse the pyramids, reconstruct, clamp to [0, 1].

    Both inputs must already share the canonical size; resize upstream.
    """
    if (visual.width, visual.height) != (thermal.width, thermal.height):
        raise ShapeMismatchError(
            f"image sizes differ: {visual.width}x{visual.height} vs {thermal.width}x{thermal.height}"
        )
    bank = bank or db2_filters()
    fused = fuse_pyramids(
        decompose(visual, levels, bank),
        decompose(thermal, levels, bank),
        fuse_approx=fuse_approx,
    )
    return clip01(reconstruct(fused, bank))
