import numpy as np
import pytest

from facefuse.imaging import GrayImage, save_pgm


def write_pair_tree(root, n_classes=2, per_class=6, width=8, height=10, seed=123):
    """Build a tiny on-disk dataset tree: root/<class>/{visual,thermal}/NNN.pgm."""
    rng = np.random.default_rng(seed)
    for c in range(n_classes):
        base = rng.random((height, width))
        for kind in ("visual", "thermal"):
            (root / f"class_{c}" / kind).mkdir(parents=True)
        for i in range(per_class):
            visual = np.clip(base + rng.normal(0, 0.05, base.shape), 0, 1)
            thermal = np.clip(1 - base + rng.normal(0, 0.05, base.shape), 0, 1)
            save_pgm(GrayImage(visual), root / f"class_{c}" / "visual" / f"{i:03d}.pgm")
            save_pgm(GrayImage(thermal), root / f"class_{c}" / "thermal" / f"{i:03d}.pgm")
    return root


@pytest.fixture
def pair_tree(tmp_path):
    return write_pair_tree(tmp_path / "data")
