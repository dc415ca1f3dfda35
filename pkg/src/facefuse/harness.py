"""Dataset manifests, deterministic splits, and end-to-end experiment
orchestration: fuse each visual/thermal pair, project into the eigenspace,
train both classifiers, and combine their labels with the belief rule.

A manifest is a line-oriented CSV (``class,visual,thermal,split``) chosen for
hand-editability; paths may be relative to the manifest file.  Everything
downstream of a (manifest, config) pair is deterministic given the seed.
"""

from __future__ import annotations

import dataclasses
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import eigenspace
from .classifiers import LabeledSample, TrainConfig, classify, train_mlp, train_rbf
from .decision_fusion import (
    ConfusionMatrix,
    Decision,
    belief,
    build_confusion,
    decide,
)
from .errors import ConfigError, FaceFuseError, ManifestError
from .fusion import fuse_images
from .imaging import flatten, load_pgm, resize
from .wavelet import db2_filters

SPLIT_TAGS = ("train", "test")


@dataclass(frozen=True)
class ManifestSample:
    class_index: int  # 1-based
    visual_path: str
    thermal_path: str
    split: str


@dataclass(frozen=True)
class DatasetManifest:
    classes: tuple
    samples: tuple

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def of_split(self, tag: str):
        return [s for s in self.samples if s.split == tag]

    def validate_runnable(self) -> None:
        problems = []
        for idx, name in enumerate(self.classes, start=1):
            n_train = sum(1 for s in self.samples if s.class_index == idx and s.split == "train")
            n_test = sum(1 for s in self.samples if s.class_index == idx and s.split == "test")
            if n_train < 1:
                problems.append(f"class {name!r} has no train samples")
            if n_test < 1:
                problems.append(f"class {name!r} has no test samples")
        if problems:
            raise ManifestError("; ".join(problems))


def load_manifest(path, require_runnable: bool = True, check_files: bool = True) -> DatasetManifest:
    """Parse and validate a manifest CSV.

    All problems are collected and reported together, each with its line
    number.  Relative sample paths are resolved against the manifest's
    directory.
    """
    path = Path(path)
    base = path.parent
    errors = []
    classes: list = []
    samples = []
    seen = {"visual": {}, "thermal": {}}

    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if lineno == 1 and line.lower().startswith("class,"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 4:
            errors.append(f"line {lineno}: expected 4 comma-separated fields, got {len(parts)}")
            continue
        cls_name, visual, thermal, split = parts
        if split not in SPLIT_TAGS:
            errors.append(f"line {lineno}: split must be train or test, got {split!r}")
            continue
        for kind, rel in (("visual", visual), ("thermal", thermal)):
            if rel in seen[kind]:
                errors.append(f"line {lineno}: duplicate {kind} path {rel!r} (first at line {seen[kind][rel]})")
            else:
                seen[kind][rel] = lineno
        visual_abs = str((base / visual).resolve()) if not Path(visual).is_absolute() else visual
        thermal_abs = str((base / thermal).resolve()) if not Path(thermal).is_absolute() else thermal
        if check_files:
            for kind, p in (("visual", visual_abs), ("thermal", thermal_abs)):
                if not Path(p).is_file():
                    errors.append(f"line {lineno}: missing {kind} file {p}")
        if cls_name not in classes:
            classes.append(cls_name)
        samples.append(ManifestSample(classes.index(cls_name) + 1, visual_abs, thermal_abs, split))

    if not samples and not errors:
        errors.append("manifest contains no samples")
    if errors:
        raise ManifestError(f"{path}: " + "; ".join(errors))

    manifest = DatasetManifest(tuple(classes), tuple(samples))
    if require_runnable:
        manifest.validate_runnable()
    return manifest


def save_manifest(manifest: DatasetManifest, path) -> None:
    lines = ["class,visual,thermal,split"]
    for s in manifest.samples:
        lines.append(f"{manifest.classes[s.class_index - 1]},{s.visual_path},{s.thermal_path},{s.split}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_manifest(root) -> DatasetManifest:
    """Scan a tree of class subfolders, each holding paired ``visual/`` and
    ``thermal/`` files matched by sorted filename.

    Pairs are tagged with an alternating default split (even positions train,
    odd test) so the result is immediately runnable; use :func:`split` for a
    seeded re-tagging.
    """
    root = Path(root)
    class_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not class_dirs:
        raise ManifestError(f"{root}: no class subdirectories found")
    classes = []
    samples = []
    for class_dir in class_dirs:
        vis_dir, thr_dir = class_dir / "visual", class_dir / "thermal"
        if not vis_dir.is_dir() or not thr_dir.is_dir():
            raise ManifestError(f"{class_dir}: expected visual/ and thermal/ subdirectories")
        vis = sorted(p for p in vis_dir.iterdir() if p.is_file())
        thr = sorted(p for p in thr_dir.iterdir() if p.is_file())
        if len(vis) != len(thr):
            raise ManifestError(f"{class_dir}: {len(vis)} visual files but {len(thr)} thermal files")
        if not vis:
            raise ManifestError(f"{class_dir}: no image pairs")
        classes.append(class_dir.name)
        for i, (v, t) in enumerate(zip(vis, thr)):
            tag = "train" if i % 2 == 0 else "test"
            samples.append(ManifestSample(len(classes), str(v), str(t), tag))
    return DatasetManifest(tuple(classes), tuple(samples))


def split(manifest: DatasetManifest, per_class_train: int, seed: int) -> DatasetManifest:
    """Seeded shuffle within each class; the first per_class_train samples
    become train, the rest test.  Output order follows the shuffle."""
    if per_class_train < 1:
        raise ConfigError(f"per_class_train must be >= 1, got {per_class_train}")
    rng = np.random.default_rng(seed)
    out = []
    for idx, name in enumerate(manifest.classes, start=1):
        members = [s for s in manifest.samples if s.class_index == idx]
        if per_class_train >= len(members):
            raise ManifestError(
                f"class {name!r} has {len(members)} samples; per_class_train={per_class_train} leaves no test data"
            )
        order = rng.permutation(len(members))
        for pos, j in enumerate(order):
            tag = "train" if pos < per_class_train else "test"
            out.append(dataclasses.replace(members[j], split=tag))
    return DatasetManifest(manifest.classes, tuple(out))


# ---------------------------------------------------------------------------
# experiment configuration and report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of the end-to-end pipeline.

    ``seed`` drives all randomness: the two classifier configs' own seeds are
    overridden with values derived from it, so (manifest, config) fully
    determines the report.
    """

    canonical_width: int = 40
    canonical_height: int = 50
    wavelet_levels: int = 5
    fuse_approx: bool = True
    variance_fraction: float = 0.95
    mlp: TrainConfig = field(default_factory=TrainConfig)
    rbf: TrainConfig = field(default_factory=TrainConfig)
    gamma: float = 0.95
    alpha: float = 1.0
    seed: int = 0
    confusion_holdout: float = 0.0

    def __post_init__(self):
        if self.canonical_width < 1 or self.canonical_height < 1:
            raise ConfigError("canonical size must be positive")
        if self.wavelet_levels < 1:
            raise ConfigError("wavelet_levels must be >= 1")
        if not 0.0 < self.variance_fraction <= 1.0:
            raise ConfigError("variance_fraction must be in (0, 1]")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must be in [0, 1]")
        if self.alpha < 0:
            raise ConfigError("alpha must be >= 0")
        if not 0.0 <= self.confusion_holdout < 1.0:
            raise ConfigError("confusion_holdout must be in [0, 1)")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        for key in ("mlp", "rbf"):
            if key in data and isinstance(data[key], dict):
                data[key] = TrainConfig(**data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None


@dataclass(frozen=True)
class SystemResult:
    """Test-set outcome of one system (a single classifier or the fused rule)."""

    recognition_rate: float
    reject_rate: float
    correct: int
    incorrect: int
    rejected: int
    per_class_rates: tuple
    cumulative_rates: tuple
    confusion: ConfusionMatrix


@dataclass(frozen=True)
class Report:
    class_names: tuple
    seed: int
    config: dict
    n_train: int
    n_test: int
    systems: dict
    estimation_confusions: dict
    belief_trace: tuple


def recognition_rate(decisions) -> float:
    """Percentage of decisions that accepted the true class; rejections count
    against the rate."""
    if not decisions:
        raise ValueError("empty decision list")
    correct = sum(1 for true, d in decisions if d.accepted and d.label == true)
    return 100.0 * correct / len(decisions)


def reject_rate(decisions) -> float:
    if not decisions:
        raise ValueError("empty decision list")
    return 100.0 * sum(1 for _, d in decisions if not d.accepted) / len(decisions)


@contextmanager
def _stage(name: str):
    try:
        yield
    except FaceFuseError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc


def fused_vector(sample: ManifestSample, cfg: ExperimentConfig, bank) -> np.ndarray:
    visual = resize(load_pgm(sample.visual_path), cfg.canonical_width, cfg.canonical_height)
    thermal = resize(load_pgm(sample.thermal_path), cfg.canonical_width, cfg.canonical_height)
    fused = fuse_images(visual, thermal, cfg.wavelet_levels, bank, fuse_approx=cfg.fuse_approx)
    return flatten(fused)


def fused_vectors(samples, cfg: ExperimentConfig) -> np.ndarray:
    bank = db2_filters()
    return np.stack([fused_vector(s, cfg, bank) for s in samples])


def summarize_decisions(decisions, n_classes: int, class_counts) -> SystemResult:
    assigned = [(true, d.label if d.accepted else n_classes + 1) for true, d in decisions]
    confusion = build_confusion(assigned, n_classes)
    correct = sum(1 for true, d in decisions if d.accepted and d.label == true)
    rejected = sum(1 for _, d in decisions if not d.accepted)
    per_class = []
    for cls in range(1, n_classes + 1):
        hits = sum(1 for true, d in decisions if true == cls and d.accepted and d.label == cls)
        per_class.append(100.0 * hits / class_counts[cls] if class_counts[cls] else 0.0)
    running, cumulative = 0, []
    for t, (true, d) in enumerate(decisions, start=1):
        running += 1 if (d.accepted and d.label == true) else 0
        cumulative.append(100.0 * running / t)
    return SystemResult(
        recognition_rate=recognition_rate(decisions),
        reject_rate=reject_rate(decisions),
        correct=correct,
        incorrect=len(decisions) - correct - rejected,
        rejected=rejected,
        per_class_rates=tuple(per_class),
        cumulative_rates=tuple(cumulative),
        confusion=confusion,
    )


def _holdout_split(labels: np.ndarray, fraction: float, seed: int):
    """Per-class holdout for confusion estimation; keeps >= 1 fit sample per class."""
    rng = np.random.default_rng(seed)
    fit_idx, est_idx = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        order = rng.permutation(len(members))
        n_est = min(int(round(fraction * len(members))), len(members) - 1)
        est_idx.extend(members[order[:n_est]])
        fit_idx.extend(members[order[n_est:]])
    return np.array(sorted(fit_idx)), np.array(sorted(est_idx))


def train_models(train_features: np.ndarray, train_labels: np.ndarray, n_classes: int, cfg: ExperimentConfig):
    """Train both classifiers and estimate their confusion matrices.

    Estimation defaults to resubstitution on the training set; a nonzero
    ``confusion_holdout`` instead reserves that per-class fraction for
    estimation and fits the models on the remainder.
    """
    if cfg.confusion_holdout > 0:
        fit_idx, est_idx = _holdout_split(train_labels, cfg.confusion_holdout, cfg.seed + 2)
    else:
        fit_idx = est_idx = np.arange(len(train_labels))
    fit_samples = [LabeledSample(f, int(l)) for f, l in zip(train_features[fit_idx], train_labels[fit_idx])]

    with _stage("train-mlp"):
        mlp = train_mlp(fit_samples, n_classes, dataclasses.replace(cfg.mlp, seed=cfg.seed))
    with _stage("train-rbf"):
        rbf = train_rbf(fit_samples, n_classes, dataclasses.replace(cfg.rbf, seed=cfg.seed + 1))

    confusions = {}
    for name, model, tau in (("mlp", mlp, cfg.mlp.reject_threshold), ("rbf", rbf, cfg.rbf.reject_threshold)):
        pairs = []
        for i in est_idx:
            label, _ = classify(model, train_features[i], tau)
            pairs.append((int(train_labels[i]), label))
        confusions[name] = build_confusion(pairs, n_classes)
    return mlp, rbf, confusions


def evaluate_patterns(test_features, test_labels, mlp, rbf, confusions, cfg: ExperimentConfig):
    """Classify each test pattern with both models and fuse the decisions."""
    n_classes = confusions["mlp"].n_classes
    decisions = {"mlp": [], "rbf": [], "fused": []}
    trace = []
    for i, (feat, true) in enumerate(zip(test_features, test_labels)):
        jm, _ = classify(mlp, feat, cfg.mlp.reject_threshold)
        jr, _ = classify(rbf, feat, cfg.rbf.reject_threshold)
        decisions["mlp"].append((true, Decision.accept(jm) if jm <= n_classes else Decision.reject()))
        decisions["rbf"].append((true, Decision.accept(jr) if jr <= n_classes else Decision.reject()))
        bel = belief([(confusions["mlp"], jm), (confusions["rbf"], jr)], cfg.alpha)
        all_rejected = jm == n_classes + 1 and jr == n_classes + 1
        fused = decide(bel, cfg.gamma, all_rejected)
        decisions["fused"].append((true, fused))
        trace.append((i, int(true), tuple(float(v) for v in bel.values), fused))
    return decisions, trace


def assemble_report(class_names, cfg: ExperimentConfig, n_train: int, test_labels,
                    decisions, confusions, trace) -> Report:
    n_classes = len(class_names)
    class_counts = {cls: int(np.sum(test_labels == cls)) for cls in range(1, n_classes + 1)}
    systems = {
        name: summarize_decisions(decs, n_classes, class_counts) for name, decs in decisions.items()
    }
    return Report(
        class_names=tuple(class_names),
        seed=cfg.seed,
        config=cfg.to_dict(),
        n_train=n_train,
        n_test=len(test_labels),
        systems=systems,
        estimation_confusions=confusions,
        belief_trace=tuple(trace),
    )


def run_experiment(manifest: DatasetManifest, cfg: ExperimentConfig) -> Report:
    """Full pipeline: fuse pairs, fit the eigenspace on train only, train both
    classifiers, fuse decisions on the test sequence, and assemble the report."""
    manifest.validate_runnable()
    n_classes = manifest.n_classes

    with _stage("fuse"):
        vectors = fused_vectors(manifest.samples, cfg)
    labels = np.array([s.class_index for s in manifest.samples], dtype=np.intp)
    is_train = np.array([s.split == "train" for s in manifest.samples])

    with _stage("pca"):
        basis = eigenspace.fit(
            vectors[is_train],
            cfg.variance_fraction,
            image_size=(cfg.canonical_width, cfg.canonical_height),
        )
        features = eigenspace.project_many(basis, vectors)

    mlp, rbf, confusions = train_models(features[is_train], labels[is_train], n_classes, cfg)

    with _stage("evaluate"):
        test_labels = labels[~is_train]
        decisions, trace = evaluate_patterns(features[~is_train], test_labels, mlp, rbf, confusions, cfg)

    return assemble_report(manifest.classes, cfg, int(is_train.sum()), test_labels,
                           decisions, confusions, trace)
