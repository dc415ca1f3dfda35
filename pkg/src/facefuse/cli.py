"""Command-line interface.

Subcommands: fuse, manifest, split, train, evaluate, run.  Pipeline flags
mirror ExperimentConfig field-for-field; a JSON config file (--config)
overrides the defaults and explicit flags override the file.

Exit codes: 0 success, 2 bad configuration, 3 image I/O failure, 4 manifest
failure, 5 shape mismatch, 6 training failure, 7 other package error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import eigenspace
from .classifiers import TrainConfig, load_mlp, load_rbf, save_mlp, save_rbf
from .decision_fusion import load_confusion, save_confusion
from .errors import (
    ConfigError,
    FaceFuseError,
    ManifestError,
    PgmError,
    ShapeMismatchError,
    TrainingError,
)
from .fusion import fuse_images
from .harness import (
    ExperimentConfig,
    Report,
    assemble_report,
    build_manifest,
    evaluate_patterns,
    fused_vectors,
    load_manifest,
    run_experiment,
    save_manifest,
    split,
    train_models,
)
from .imaging import load_pgm, resize, save_pgm
from .report import write_report

import numpy as np

_EXIT_CODES = (
    (ConfigError, 2),
    (PgmError, 3),
    (FileNotFoundError, 3),
    (ManifestError, 4),
    (ShapeMismatchError, 5),
    (TrainingError, 6),
    (FaceFuseError, 7),
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON file of ExperimentConfig fields")
    g = parser.add_argument_group("pipeline")
    g.add_argument("--width", type=int, help="canonical raster width (default 40)")
    g.add_argument("--height", type=int, help="canonical raster height (default 50)")
    g.add_argument("--levels", type=int, help="wavelet decomposition depth (default 5)")
    g.add_argument("--fuse-approx", dest="fuse_approx", action="store_true", default=None,
                   help="max-merge the approximation band too (default)")
    g.add_argument("--no-fuse-approx", dest="fuse_approx", action="store_false", default=None,
                   help="average the approximation band instead")
    g.add_argument("--variance-fraction", type=float, help="PCA cumulative variance kept (default 0.95)")
    g.add_argument("--gamma", type=float, help="belief acceptance threshold (default 0.95)")
    g.add_argument("--alpha", type=float, help="confusion smoothing (default 1.0)")
    g.add_argument("--seed", type=int, help="experiment seed (default 0)")
    g.add_argument("--confusion-holdout", type=float,
                   help="per-class fraction of train held out for confusion estimation (default 0)")
    m = parser.add_argument_group("mlp")
    m.add_argument("--mlp-hidden-units", type=int)
    m.add_argument("--mlp-learning-rate", type=float)
    m.add_argument("--mlp-momentum", type=float)
    m.add_argument("--mlp-epochs", type=int)
    m.add_argument("--mlp-reject-threshold", type=float)
    r = parser.add_argument_group("rbf")
    r.add_argument("--rbf-centers-per-class", type=int)
    r.add_argument("--rbf-ridge", type=float)
    r.add_argument("--rbf-reject-threshold", type=float)


_FLAG_MAP = {
    "width": "canonical_width",
    "height": "canonical_height",
    "levels": "wavelet_levels",
    "fuse_approx": "fuse_approx",
    "variance_fraction": "variance_fraction",
    "gamma": "gamma",
    "alpha": "alpha",
    "seed": "seed",
    "confusion_holdout": "confusion_holdout",
}
_MLP_FLAGS = ("hidden_units", "learning_rate", "momentum", "epochs", "reject_threshold")
_RBF_FLAGS = ("centers_per_class", "ridge", "reject_threshold")


def build_config(args, base: dict | None = None) -> ExperimentConfig:
    """defaults < --config file < base dict (if any) < explicit flags."""
    data: dict = {}
    if base:
        data.update(base)
    if args.config:
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}") from None
    cfg = ExperimentConfig.from_dict(data)

    updates = {}
    for flag, field in _FLAG_MAP.items():
        value = getattr(args, flag, None)
        if value is not None:
            updates[field] = value
    mlp_updates = {f: getattr(args, f"mlp_{f}", None) for f in _MLP_FLAGS}
    mlp_updates = {k: v for k, v in mlp_updates.items() if v is not None}
    rbf_updates = {}
    for f in _RBF_FLAGS:
        value = getattr(args, f"rbf_{f}", None)
        if value is not None:
            key = f if f == "reject_threshold" else f"rbf_{f}"
            rbf_updates[key] = value
    try:
        if mlp_updates:
            updates["mlp"] = dataclasses.replace(cfg.mlp, **mlp_updates)
        if rbf_updates:
            updates["rbf"] = dataclasses.replace(cfg.rbf, **rbf_updates)
        return dataclasses.replace(cfg, **updates) if updates else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_fuse(args) -> int:
    cfg = build_config(args)
    visual = resize(load_pgm(args.visual), cfg.canonical_width, cfg.canonical_height)
    thermal = resize(load_pgm(args.thermal), cfg.canonical_width, cfg.canonical_height)
    # coefficient ties go to the first input (the visual image)
    fused = fuse_images(visual, thermal, cfg.wavelet_levels, fuse_approx=cfg.fuse_approx)
    save_pgm(fused, args.output)
    print(f"wrote {args.output}")
    return 0


def cmd_manifest(args) -> int:
    manifest = build_manifest(args.root)
    save_manifest(manifest, args.output)
    n_train = len(manifest.of_split("train"))
    print(f"wrote {args.output}: {manifest.n_classes} classes, {len(manifest.samples)} pairs "
          f"({n_train} train / {len(manifest.samples) - n_train} test)")
    return 0


def cmd_split(args) -> int:
    manifest = load_manifest(args.manifest, require_runnable=False, check_files=not args.no_check)
    out = split(manifest, args.per_class_train, args.seed)
    save_manifest(out, args.output)
    print(f"wrote {args.output}: {args.per_class_train} train per class, seed {args.seed}")
    return 0


def cmd_train(args) -> int:
    cfg = build_config(args)
    manifest = load_manifest(args.manifest, require_runnable=False)
    train_samples = manifest.of_split("train")
    if not train_samples:
        raise ManifestError(f"{args.manifest}: no samples tagged train")
    vectors = fused_vectors(train_samples, cfg)
    labels = np.array([s.class_index for s in train_samples], dtype=np.intp)

    basis = eigenspace.fit(vectors, cfg.variance_fraction,
                           image_size=(cfg.canonical_width, cfg.canonical_height))
    features = eigenspace.project_many(basis, vectors)
    mlp, rbf, confusions = train_models(features, labels, manifest.n_classes, cfg)

    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    eigenspace.save_basis(basis, out / "basis.npz")
    save_mlp(mlp, out / "mlp.npz")
    save_rbf(rbf, out / "rbf.npz")
    save_confusion(confusions["mlp"], out / "confusion_train_mlp.txt")
    save_confusion(confusions["rbf"], out / "confusion_train_rbf.txt")
    (out / "classes.txt").write_text("\n".join(manifest.classes) + "\n")
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    print(f"wrote models to {out} (MLP train acc {mlp.train_accuracy:.3f}, "
          f"RBF train acc {rbf.train_accuracy:.3f})")
    return 0


def cmd_evaluate(args) -> int:
    model_dir = Path(args.models)
    try:
        base = json.loads((model_dir / "config.json").read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {model_dir / 'config.json'}: {exc}") from None
    cfg = build_config(args, base=base)

    manifest = load_manifest(args.manifest, require_runnable=False)
    test_samples = manifest.of_split("test")
    if not test_samples:
        raise ManifestError(f"{args.manifest}: no samples tagged test")

    basis = eigenspace.load_basis(model_dir / "basis.npz")
    mlp = load_mlp(model_dir / "mlp.npz")
    rbf = load_rbf(model_dir / "rbf.npz")
    confusions = {
        "mlp": load_confusion(model_dir / "confusion_train_mlp.txt"),
        "rbf": load_confusion(model_dir / "confusion_train_rbf.txt"),
    }

    vectors = fused_vectors(test_samples, cfg)
    features = eigenspace.project_many(basis, vectors)
    labels = np.array([s.class_index for s in test_samples], dtype=np.intp)
    decisions, trace = evaluate_patterns(features, labels, mlp, rbf, confusions, cfg)

    report = assemble_report(manifest.classes, cfg, len(manifest.of_split("train")),
                             labels, decisions, confusions, trace)
    write_report(report, args.output, figures=not args.no_figures, belief_trace=args.belief_trace)
    _print_summary(report)
    return 0


def cmd_run(args) -> int:
    cfg = build_config(args)
    manifest = load_manifest(args.manifest)
    report = run_experiment(manifest, cfg)
    write_report(report, args.output, figures=not args.no_figures, belief_trace=args.belief_trace)
    _print_summary(report)
    return 0


def _print_summary(report: Report) -> None:
    for name in ("mlp", "rbf", "fused"):
        r = report.systems[name]
        print(f"{name:>6}: recognition {r.recognition_rate:.2f}%  reject {r.reject_rate:.2f}%")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="facefuse", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse one visual/thermal pair into a PGM "
                                    "(coefficient ties favor the visual input)")
    p.add_argument("visual")
    p.add_argument("thermal")
    p.add_argument("-o", "--output", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("manifest", help="build a manifest from a directory tree of class folders")
    p.add_argument("root")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_manifest)

    p = sub.add_parser("split", help="re-tag a manifest with a seeded per-class train/test split")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--per-class-train", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-check", action="store_true", help="skip file-existence checks")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit the eigenspace and both classifiers; save models")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="model output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate saved models on a manifest's test split")
    p.add_argument("manifest")
    p.add_argument("models", help="directory written by the train subcommand")
    p.add_argument("-o", "--output", required=True, help="report output directory")
    p.add_argument("--belief-trace", action="store_true", help="also write beliefs.csv")
    p.add_argument("--no-figures", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="end-to-end experiment: train, evaluate, report")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True, help="report output directory")
    p.add_argument("--belief-trace", action="store_true", help="also write beliefs.csv")
    p.add_argument("--no-figures", action="store_true")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except tuple(cls for cls, _ in _EXIT_CODES) as exc:
        for cls, code in _EXIT_CODES:
            if isinstance(exc, cls):
                print(f"error: {exc}", file=sys.stderr)
                return code
        raise  # unreachable


if __name__ == "__main__":
    sys.exit(main())
