"""Two independent classifiers over feature vectors: a one-hidden-layer
perceptron (tanh / softmax / cross-entropy, full-batch gradient descent with
momentum) and a radial-basis-function network (per-class k-means centers,
Gaussian activations, ridge-regularized least-squares output weights).

Both expose classify-with-reject: labels are 1..N, with N+1 meaning the
score threshold was not met.  Training is deterministic given the seed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import FaceFuseError, TrainingError

logger = logging.getLogger(__name__)

_MLP_FORMAT = "facefuse-mlp-v1"
_RBF_FORMAT = "facefuse-rbf-v1"


@dataclass(frozen=True)
class LabeledSample:
    """A feature vector tagged with its class index (1-based)."""

    feature: np.ndarray
    label: int

    def __post_init__(self):
        object.__setattr__(self, "feature", np.asarray(self.feature, dtype=np.float64))
        if self.label < 1:
            raise ValueError(f"label must be >= 1, got {self.label}")


@dataclass(frozen=True)
class TrainConfig:
    hidden_units: int = 64
    learning_rate: float = 0.01
    momentum: float = 0.9
    epochs: int = 500
    seed: int = 0
    reject_threshold: float = 0.0
    rbf_centers_per_class: int = 1
    rbf_ridge: float = 1e-6

    def __post_init__(self):
        if self.hidden_units < 1 or self.epochs < 1 or self.rbf_centers_per_class < 1:
            raise ValueError("hidden_units, epochs and rbf_centers_per_class must be >= 1")
        if self.learning_rate <= 0 or not 0 <= self.momentum < 1:
            raise ValueError("learning_rate must be > 0 and momentum in [0, 1)")
        if not 0 <= self.reject_threshold < 1:
            raise ValueError("reject_threshold must lie in [0, 1)")
        if self.rbf_ridge < 0:
            raise ValueError("rbf_ridge must be >= 0")


def _stack(data, n_classes: int):
    """Convert LabeledSamples to (X, labels) and check every class is populated."""
    if not data:
        raise TrainingError("no training samples")
    features = [s.feature for s in data]
    dims = {f.shape for f in features}
    if len(dims) != 1 or features[0].ndim != 1:
        raise TrainingError(f"features must be 1-D vectors of one length, got shapes {sorted(map(str, dims))}")
    labels = np.array([s.label for s in data], dtype=np.intp)
    if labels.min() < 1 or labels.max() > n_classes:
        raise TrainingError(f"labels must lie in 1..{n_classes}")
    missing = sorted(set(range(1, n_classes + 1)) - set(labels.tolist()))
    if missing:
        raise TrainingError(f"classes without training samples: {missing}")
    return np.stack(features), labels


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# multilayer perceptron
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpModel:
    """k -> H -> N perceptron with tanh hidden units and softmax outputs."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    train_accuracy: float = float("nan")

    @property
    def n_features(self) -> int:
        return self.w1.shape[0]

    @property
    def n_classes(self) -> int:
        return self.w2.shape[1]

    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.n_features:
            raise ValueError(f"feature length {features.shape[1]} != model input {self.n_features}")
        hidden = np.tanh(features @ self.w1 + self.b1)
        return _softmax(hidden @ self.w2 + self.b2)


def mlp_loss_and_grads(w1, b1, w2, b2, X, onehot):
    """Cross-entropy loss and its analytic gradients for one full batch."""
    hidden = np.tanh(X @ w1 + b1)
    probs = _softmax(hidden @ w2 + b2)
    n = X.shape[0]
    loss = -np.mean(np.log(np.sum(probs * onehot, axis=1) + 1e-300))
    dz2 = (probs - onehot) / n
    dw2 = hidden.T @ dz2
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ w2.T) * (1.0 - hidden**2)
    dw1 = X.T @ dz1
    db1 = dz1.sum(axis=0)
    return loss, (dw1, db1, dw2, db2)


def train_mlp(data, n_classes: int, cfg: TrainConfig) -> MlpModel:
    """Full-batch gradient descent with momentum from a seeded uniform init."""
    X, labels = _stack(data, n_classes)
    onehot = np.eye(n_classes)[labels - 1]
    rng = np.random.default_rng(cfg.seed)
    k, h = X.shape[1], cfg.hidden_units
    params = [
        rng.uniform(-0.1, 0.1, (k, h)),
        rng.uniform(-0.1, 0.1, h),
        rng.uniform(-0.1, 0.1, (h, n_classes)),
        rng.uniform(-0.1, 0.1, n_classes),
    ]
    velocity = [np.zeros_like(p) for p in params]

    for epoch in range(cfg.epochs):
        loss, grads = mlp_loss_and_grads(*params, X, onehot)
        if not np.isfinite(loss):
            raise TrainingError(f"MLP training diverged at epoch {epoch} (loss={loss})")
        for p, v, g in zip(params, velocity, grads):
            v *= cfg.momentum
            v -= cfg.learning_rate * g
            p += v

    model = MlpModel(*params)
    accuracy = float(np.mean(model.predict_scores(X).argmax(axis=1) + 1 == labels))
    logger.info("MLP trained: %d epochs, training accuracy %.4f", cfg.epochs, accuracy)
    return MlpModel(*params, train_accuracy=accuracy)


# ---------------------------------------------------------------------------
# radial basis function network
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RbfModel:
    """Gaussian-activation network: centers, per-center spreads, and a
    ((centers + 1) x N) least-squares weight matrix whose last row is the bias."""

    centers: np.ndarray
    sigmas: np.ndarray
    weights: np.ndarray
    train_accuracy: float = float("nan")

    @property
    def n_features(self) -> int:
        return self.centers.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    def activations(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if features.shape[1] != self.n_features:
            raise ValueError(f"feature length {features.shape[1]} != model input {self.n_features}")
        d2 = ((features[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        phi = np.exp(-d2 / (2.0 * self.sigmas**2))
        return np.hstack([phi, np.ones((features.shape[0], 1))])

    def predict_scores(self, features: np.ndarray) -> np.ndarray:
        raw = np.clip(self.activations(features) @ self.weights, 0.0, None)
        totals = raw.sum(axis=1, keepdims=True)
        scores = np.full_like(raw, 1.0 / self.n_classes)
        np.divide(raw, totals, out=scores, where=totals > 0)
        return scores


def _kmeans(points: np.ndarray, k: int, rng, iters: int = 100) -> np.ndarray:
    centers = points[rng.choice(points.shape[0], size=k, replace=False)].copy()
    for _ in range(iters):
        d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        new = np.empty_like(centers)
        for j in range(k):
            members = points[assign == j]
            # reseed an empty cluster at the worst-covered point
            new[j] = members.mean(axis=0) if len(members) else points[d2.min(axis=1).argmax()]
        if np.array_equal(new, centers):
            break
        centers = new
    return centers


def _spreads(centers: np.ndarray) -> np.ndarray:
    n = centers.shape[0]
    if n == 1:
        return np.ones(1)
    dist = np.sqrt(((centers[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    dist.sort(axis=1)
    nearest = dist[:, : min(2, n - 1)]
    return np.maximum(nearest.mean(axis=1), 1e-6)


def train_rbf(data, n_classes: int, cfg: TrainConfig) -> RbfModel:
    """Seeded per-class k-means centers, heuristic spreads, ridge output solve."""
    X, labels = _stack(data, n_classes)
    rng = np.random.default_rng(cfg.seed)
    centers = []
    for cls in range(1, n_classes + 1):
        members = X[labels == cls]
        if len(members) < cfg.rbf_centers_per_class:
            raise TrainingError(
                f"class {cls} has {len(members)} samples, fewer than "
                f"rbf_centers_per_class={cfg.rbf_centers_per_class}"
            )
        centers.append(_kmeans(members, cfg.rbf_centers_per_class, rng))
    centers = np.vstack(centers)
    sigmas = _spreads(centers)

    stub = RbfModel(centers, sigmas, np.zeros((centers.shape[0] + 1, n_classes)))
    phi = stub.activations(X)
    onehot = np.eye(n_classes)[labels - 1]
    if cfg.rbf_ridge > 0:
        gram = phi.T @ phi + cfg.rbf_ridge * np.eye(phi.shape[1])
        try:
            weights = np.linalg.solve(gram, phi.T @ onehot)
        except np.linalg.LinAlgError as exc:
            raise TrainingError(f"RBF normal equations singular despite ridge {cfg.rbf_ridge}: {exc}") from None
    else:
        weights, *_ = np.linalg.lstsq(phi, onehot, rcond=None)

    model = RbfModel(centers, sigmas, weights)
    accuracy = float(np.mean(model.predict_scores(X).argmax(axis=1) + 1 == labels))
    logger.info("RBF trained: %d centers, training accuracy %.4f", centers.shape[0], accuracy)
    return RbfModel(centers, sigmas, weights, train_accuracy=accuracy)


# ---------------------------------------------------------------------------
# shared classify-with-reject front end
# ---------------------------------------------------------------------------


def classify(model, feature, tau: float = 0.0):
    """Label in 1..N, or N+1 when the top normalized score falls below tau.

    Returns (label, scores); ties resolve to the lowest class index.
    """
    scores = model.predict_scores(np.asarray(feature, dtype=np.float64)[None, :])[0]
    best = int(scores.argmax())
    label = best + 1 if scores[best] >= tau else model.n_classes + 1
    return label, scores


def classify_many(model, features: np.ndarray, tau: float = 0.0) -> np.ndarray:
    """Vectorized classify over (n, k) feature rows; returns labels only."""
    scores = model.predict_scores(features)
    labels = scores.argmax(axis=1) + 1
    labels[scores.max(axis=1) < tau] = model.n_classes + 1
    return labels


def save_mlp(model: MlpModel, path) -> None:
    np.savez(path, format=_MLP_FORMAT, w1=model.w1, b1=model.b1, w2=model.w2, b2=model.b2,
             train_accuracy=model.train_accuracy)


def load_mlp(path) -> MlpModel:
    with np.load(path, allow_pickle=False) as d:
        if str(d["format"]) != _MLP_FORMAT:
            raise FaceFuseError(f"{path}: unknown MLP container format {d['format']!r}")
        return MlpModel(d["w1"], d["b1"], d["w2"], d["b2"], float(d["train_accuracy"]))


def save_rbf(model: RbfModel, path) -> None:
    np.savez(path, format=_RBF_FORMAT, centers=model.centers, sigmas=model.sigmas,
             weights=model.weights, train_accuracy=model.train_accuracy)


def load_rbf(path) -> RbfModel:
    with np.load(path, allow_pickle=False) as d:
        if str(d["format"]) != _RBF_FORMAT:
            raise FaceFuseError(f"{path}: unknown RBF container format {d['format']!r}")
        return RbfModel(d["centers"], d["sigmas"], d["weights"], float(d["train_accuracy"]))
