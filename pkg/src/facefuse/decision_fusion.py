"""Combining classifier labels through confusion-matrix belief values.

Each classifier carries an N x (N+1) confusion matrix (row = true class,
column = assigned label, last column = rejections).  A column-normalized
conditional probability is read off per classifier, the per-class product of
those probabilities is normalized into a belief vector, and the decision
rule accepts the argmax class only when its belief clears the gamma bar.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ShapeMismatchError

DEFAULT_GAMMA = 0.95
DEFAULT_ALPHA = 1.0


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts[i][j] = times a true-class-(i+1) pattern was assigned label j+1;
    the extra final column tallies rejections (label N+1)."""

    n_classes: int
    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.n_classes, self.n_classes + 1):
            raise ValueError(
                f"confusion matrix must be {self.n_classes}x{self.n_classes + 1}, got {counts.shape}"
            )
        if (counts < 0).any():
            raise ValueError("confusion counts must be non-negative")
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)


def build_confusion(predictions, n_classes: int) -> ConfusionMatrix:
    """Tally (true label, assigned label) pairs; assigned N+1 is the reject column."""
    counts = np.zeros((n_classes, n_classes + 1), dtype=np.int64)
    for true, assigned in predictions:
        if not 1 <= true <= n_classes:
            raise ValueError(f"true label {true} outside 1..{n_classes}")
        if not 1 <= assigned <= n_classes + 1:
            raise ValueError(f"assigned label {assigned} outside 1..{n_classes + 1}")
        counts[true - 1, assigned - 1] += 1
    return ConfusionMatrix(n_classes, counts)


def conditional_prob(matrix: ConfusionMatrix, i: int, j: int, alpha: float = DEFAULT_ALPHA) -> float:
    """P(true class i | assigned label j), column-normalized with additive
    smoothing alpha; an unsmoothed all-zero column falls back to uniform 1/N."""
    n = matrix.n_classes
    if not 1 <= i <= n:
        raise ValueError(f"class {i} outside 1..{n}")
    if not 1 <= j <= n + 1:
        raise ValueError(f"label {j} outside 1..{n + 1}")
    column = matrix.counts[:, j - 1]
    denom = column.sum() + n * alpha
    if denom == 0:
        return 1.0 / n
    return (column[i - 1] + alpha) / denom


def _column_probs(matrix: ConfusionMatrix, j: int, alpha: float) -> np.ndarray:
    column = matrix.counts[:, j - 1].astype(np.float64)
    denom = column.sum() + matrix.n_classes * alpha
    if denom == 0:
        return np.full(matrix.n_classes, 1.0 / matrix.n_classes)
    return (column + alpha) / denom


@dataclass(frozen=True)
class BeliefVector:
    """Normalized per-class beliefs; degenerate means every product was zero."""

    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def belief(assignments, alpha: float = DEFAULT_ALPHA) -> BeliefVector:
    """Normalized product over classifiers of P(class | assigned label).

    ``assignments`` is a list of (ConfusionMatrix, assigned label) pairs, one
    per classifier; a classifier that rejected contributes its reject-column
    probabilities.  Products are accumulated in log space; if every class
    product is zero the result is an all-zero vector flagged degenerate.
    """
    if not assignments:
        raise ValueError("need at least one classifier assignment")
    n = assignments[0][0].n_classes
    log_prod = np.zeros(n)
    for matrix, assigned in assignments:
        if matrix.n_classes != n:
            raise ShapeMismatchError(f"classifier matrices disagree on N: {matrix.n_classes} vs {n}")
        probs = _column_probs(matrix, assigned, alpha)
        with np.errstate(divide="ignore"):
            log_prod += np.log(probs)
    peak = log_prod.max()
    if peak == -np.inf:
        return BeliefVector(np.zeros(n), degenerate=True)
    weights = np.exp(log_prod - peak)
    return BeliefVector(weights / weights.sum())


@dataclass(frozen=True)
class Decision:
    """Accept(class index in 1..N) or Reject."""

    label: int | None

    @property
    def accepted(self) -> bool:
        return self.label is not None

    @classmethod
    def accept(cls, label: int) -> "Decision":
        if label < 1:
            raise ValueError(f"accepted label must be >= 1, got {label}")
        return cls(label)

    @classmethod
    def reject(cls) -> "Decision":
        return cls(None)


def decide(bel: BeliefVector, gamma: float = DEFAULT_GAMMA, all_rejected: bool = False) -> Decision:
    """Accept the argmax class iff its belief strictly exceeds gamma; reject
    otherwise, and reject outright when every classifier rejected."""
    if all_rejected:
        return Decision.reject()
    best = int(bel.values.argmax())
    if bel.values[best] > gamma:
        return Decision.accept(best + 1)
    return Decision.reject()


def save_confusion(matrix: ConfusionMatrix, path) -> None:
    """Plain-text grid: first line N, then N rows of N+1 integers."""
    lines = [str(matrix.n_classes)]
    lines += [" ".join(str(v) for v in row) for row in matrix.counts]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_confusion(path) -> ConfusionMatrix:
    text = Path(path).read_text(encoding="ascii").split()
    if not text:
        raise ValueError(f"{path}: empty confusion matrix file")
    n = int(text[0])
    cells = text[1:]
    if len(cells) != n * (n + 1):
        raise ValueError(f"{path}: expected {n * (n + 1)} cells for N={n}, found {len(cells)}")
    counts = np.array([int(c) for c in cells], dtype=np.int64).reshape(n, n + 1)
    return ConfusionMatrix(n, counts)
