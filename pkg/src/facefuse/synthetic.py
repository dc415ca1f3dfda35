"""Synthetic visual/thermal face-pair generator for experiments and tests.

Each class gets a distinct smooth base pattern.  Visual samples are the base
corrupted by a random illumination ramp plus noise; thermal samples are a
smoothed complement of the base plus noise.  Classes are generated in
look-alike groups sharing a prototype so classifiers make structured,
recoverable confusions.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .harness import DatasetManifest, ManifestSample
from .imaging import GrayImage, save_pgm


def _smooth_field(rng, width: int, height: int, n_waves: int = 5) -> np.ndarray:
    y, x = np.mgrid[0:height, 0:width]
    xn, yn = x / width, y / height
    field = np.zeros((height, width))
    for _ in range(n_waves):
        fx, fy = rng.uniform(0.5, 3.0, 2)
        phase = rng.uniform(0, 2 * np.pi)
        field += rng.uniform(0.4, 1.0) * np.cos(2 * np.pi * (fx * xn + fy * yn) + phase)
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo)


def _box_blur(img: np.ndarray, radius: int = 2) -> np.ndarray:
    k = 2 * radius + 1
    padded = np.pad(img, radius, mode="edge")
    out = np.zeros_like(img)
    for dy in range(k):
        for dx in range(k):
            out += padded[dy:dy + img.shape[0], dx:dx + img.shape[1]]
    return out / (k * k)


def generate_pairs(
    n_classes: int = 10,
    per_class: int = 22,
    width: int = 40,
    height: int = 50,
    seed: int = 7,
    prototype_groups: int = 5,
    distinctness: float = 0.35,
    illumination: float = 0.7,
    visual_noise: float = 0.08,
    thermal_noise: float = 0.06,
):
    """Yield (class_index, visual GrayImage, thermal GrayImage) tuples.

    ``distinctness`` scales how far each class departs from its shared
    prototype; smaller values make the look-alike groups harder to separate.
    """
    rng = np.random.default_rng(seed)
    prototypes = [_smooth_field(rng, width, height) for _ in range(prototype_groups)]
    bases = []
    for c in range(n_classes):
        own = _smooth_field(rng, width, height)
        mix = (1.0 - distinctness) * prototypes[c % prototype_groups] + distinctness * own
        lo, hi = mix.min(), mix.max()
        bases.append(0.15 + 0.7 * (mix - lo) / (hi - lo))

    y, x = np.mgrid[0:height, 0:width]
    xn, yn = x / width - 0.5, y / height - 0.5
    out = []
    for c, base in enumerate(bases, start=1):
        thermal_base = _box_blur(1.0 - base, radius=2)
        for _ in range(per_class):
            gx, gy = rng.uniform(-1.0, 1.0, 2)
            ramp = illumination * (gx * xn + gy * yn)
            visual = np.clip(base + ramp + rng.normal(0, visual_noise, base.shape), 0, 1)
            thermal = np.clip(thermal_base + rng.normal(0, thermal_noise, base.shape), 0, 1)
            out.append((c, GrayImage(visual), GrayImage(thermal)))
    return out


def write_dataset(root, pairs, class_names=None) -> DatasetManifest:
    """Write pairs as PGM files under root/<class>/{visual,thermal}/ and build
    an (all-train) manifest over them."""
    root = Path(root)
    indices = sorted({c for c, _, _ in pairs})
    names = class_names or [f"class_{c:02d}" for c in indices]
    counters = {c: 0 for c in indices}
    samples = []
    for c, visual, thermal in pairs:
        class_dir = root / names[c - 1]
        (class_dir / "visual").mkdir(parents=True, exist_ok=True)
        (class_dir / "thermal").mkdir(parents=True, exist_ok=True)
        i = counters[c]
        counters[c] += 1
        vis_path = class_dir / "visual" / f"{i:03d}.pgm"
        thr_path = class_dir / "thermal" / f"{i:03d}.pgm"
        save_pgm(visual, vis_path)
        save_pgm(thermal, thr_path)
        samples.append(ManifestSample(c, str(vis_path), str(thr_path), "train"))
    return DatasetManifest(tuple(names), tuple(samples))
