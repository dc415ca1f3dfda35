"""Eigenface-style PCA feature extraction.

The basis is fit with the snapshot method: eigendecompose the MxM Gram
matrix of the centered training vectors (M samples of dimension D, D >> M),
map eigenvectors back to D-space, and keep the smallest set of components
whose eigenvalue mass reaches the requested variance fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FaceFuseError

DEFAULT_VARIANCE_FRACTION = 0.95
_EIGENBASIS_FORMAT = "facefuse-eigenbasis-v1"


class ZeroVarianceError(FaceFuseError):
    """All training vectors are identical; no eigenspace exists."""


@dataclass(frozen=True)
class EigenBasis:
    """Mean vector plus orthonormal components in descending eigenvalue order.

    ``components`` has shape (k, D); ``eigenvalues`` the matching k variances.
    ``image_size`` optionally records the (width, height) the vectors came
    from, for tools that reshape components back into rasters.
    """

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    image_size: tuple | None = None

    def __post_init__(self):
        for name in ("mean", "components", "eigenvalues"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.mean.size


def fit(training, variance_fraction: float = DEFAULT_VARIANCE_FRACTION, image_size=None) -> EigenBasis:
    """Fit a snapshot-PCA basis from >= 2 equal-length training vectors.

    Keeps the smallest k whose cumulative eigenvalue mass reaches
    ``variance_fraction`` of the total (k >= 1 always, k <= M - 1).
    """
    if not 0.0 < variance_fraction <= 1.0:
        raise ValueError(f"variance_fraction must be in (0, 1], got {variance_fraction}")
    X = np.asarray(training, dtype=np.float64)
    if X.ndim != 2:
        lengths = {np.asarray(v).shape for v in training}
        raise ValueError(f"training vectors have inconsistent shapes: {sorted(map(str, lengths))}")
    m, d = X.shape
    if m < 2:
        raise ValueError(f"need at least 2 training vectors, got {m}")

    mean = X.mean(axis=0)
    centered = X - mean
    gram = centered @ centered.T / m
    eigvals, eigvecs = np.linalg.eigh(gram)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)

    total = eigvals.sum()
    if total <= 0.0:
        raise ZeroVarianceError("training vectors are all identical")

    # centering costs one rank; drop numerically-zero tail modes
    rank_cap = min(d, m - 1)
    nonzero = int(np.sum(eigvals > total * 1e-12))
    limit = max(1, min(rank_cap, nonzero))
    cumulative = np.cumsum(eigvals[:limit])
    k = int(np.searchsorted(cumulative, variance_fraction * total - 1e-15) + 1)
    k = min(k, limit)

    components = np.empty((k, d))
    for i in range(k):
        v = centered.T @ eigvecs[:, order[i]]
        v /= np.linalg.norm(v)
        # sign convention: largest-magnitude entry is positive
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        components[i] = v
    return EigenBasis(mean, components, eigvals[:k], image_size)


def project(basis: EigenBasis, vector) -> np.ndarray:
    """Coordinates of a vector in the basis: components @ (vector - mean)."""
    vector = np.asarray(vector, dtype=np.float64)
    if vector.shape != (basis.dim,):
        raise ValueError(f"vector length {vector.shape} does not match basis dimension {basis.dim}")
    return basis.components @ (vector - basis.mean)


def project_many(basis: EigenBasis, vectors) -> np.ndarray:
    """Project a (n, D) stack of vectors to (n, k) feature rows."""
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[1] != basis.dim:
        raise ValueError(f"expected shape (n, {basis.dim}), got {vectors.shape}")
    return (vectors - basis.mean) @ basis.components.T


def reconstruct_from(basis: EigenBasis, coords) -> np.ndarray:
    """Diagnostic inverse of project: mean + coords @ components."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.shape != (basis.k,):
        raise ValueError(f"coords length {coords.shape} does not match basis k={basis.k}")
    return basis.mean + coords @ basis.components


def save_basis(basis: EigenBasis, path) -> None:
    size = (-1, -1) if basis.image_size is None else tuple(basis.image_size)
    np.savez(
        path,
        format=_EIGENBASIS_FORMAT,
        mean=basis.mean,
        components=basis.components,
        eigenvalues=basis.eigenvalues,
        image_size=np.asarray(size, dtype=np.int64),
    )


def load_basis(path) -> EigenBasis:
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != _EIGENBASIS_FORMAT:
            raise FaceFuseError(f"{path}: unknown eigenbasis container format {data['format']!r}")
        size = tuple(int(v) for v in data["image_size"])
        return EigenBasis(
            data["mean"],
            data["components"],
            data["eigenvalues"],
            None if size == (-1, -1) else size,
        )
