import json

import numpy as np
import pytest

from facefuse.cli import main
from facefuse.imaging import GrayImage, load_pgm, save_pgm

FAST_FLAGS = [
    "--width", "8", "--height", "10", "--levels", "2",
    "--mlp-hidden-units", "8", "--mlp-epochs", "60", "--mlp-learning-rate", "0.2",
    "--alpha", "0", "--gamma", "0.5",
]


@pytest.fixture
def dataset(tmp_path, pair_tree):
    manifest_path = tmp_path / "manifest.csv"
    assert main(["manifest", str(pair_tree), "-o", str(manifest_path)]) == 0
    split_path = tmp_path / "split.csv"
    assert main(["split", str(manifest_path), "-o", str(split_path), "--per-class-train", "3", "--seed", "1"]) == 0
    return split_path


class TestFuseCommand:
    def test_writes_loadable_pgm(self, tmp_path):
        rng = np.random.default_rng(0)
        save_pgm(GrayImage(rng.random((10, 8))), tmp_path / "v.pgm")
        save_pgm(GrayImage(rng.random((10, 8))), tmp_path / "t.pgm")
        out = tmp_path / "fused.pgm"
        code = main(["fuse", str(tmp_path / "v.pgm"), str(tmp_path / "t.pgm"),
                     "-o", str(out), "--width", "8", "--height", "10", "--levels", "2"])
        assert code == 0
        fused = load_pgm(out)
        assert (fused.width, fused.height) == (8, 10)

    def test_missing_input_exit_code(self, tmp_path, capsys):
        code = main(["fuse", str(tmp_path / "nope.pgm"), str(tmp_path / "also.pgm"),
                     "-o", str(tmp_path / "out.pgm")])
        assert code == 3
        assert "error:" in capsys.readouterr().err


class TestManifestAndSplit:
    def test_manifest_then_split(self, dataset):
        text = dataset.read_text()
        assert text.startswith("class,visual,thermal,split")
        assert text.count(",train") == 6 and text.count(",test") == 6

    def test_bad_manifest_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("class,visual,thermal,split\nonly,two\n")
        code = main(["split", str(bad), "-o", str(tmp_path / "o.csv"), "--per-class-train", "1"])
        assert code == 4


class TestRunCommand:
    def test_end_to_end_outputs(self, dataset, tmp_path):
        out = tmp_path / "report"
        code = main(["run", str(dataset), "-o", str(out), "--belief-trace", *FAST_FLAGS])
        assert code == 0
        for name in (
            "summary.txt",
            "rates.csv",
            "per_class_rates.csv",
            "cumulative_rates.csv",
            "confusion_test_fused.txt",
            "confusion_train_mlp.txt",
            "beliefs.csv",
            "recognition_rates.png",
            "per_class_rates.png",
        ):
            assert (out / name).exists(), name
        header = (out / "rates.csv").read_text().splitlines()[0]
        assert header == "system,recognition_rate,reject_rate,correct,incorrect,rejected"

    def test_config_file_with_flag_override(self, dataset, tmp_path):
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({
            "canonical_width": 8, "canonical_height": 10, "wavelet_levels": 2,
            "gamma": 0.5, "alpha": 0.0,
            "mlp": {"hidden_units": 8, "epochs": 60, "learning_rate": 0.2},
        }))
        out = tmp_path / "report"
        code = main(["run", str(dataset), "-o", str(out), "--config", str(cfg_file),
                     "--gamma", "0.25", "--no-figures"])
        assert code == 0
        summary = (out / "summary.txt").read_text()
        assert "'gamma': 0.25" in summary  # flag wins over the file
        assert not (out / "recognition_rates.png").exists()

    def test_bad_config_exit_code(self, dataset, tmp_path, capsys):
        code = main(["run", str(dataset), "-o", str(tmp_path / "r"), "--gamma", "2.0"])
        assert code == 2


class TestTrainEvaluate:
    def test_train_then_evaluate(self, dataset, tmp_path):
        models = tmp_path / "models"
        assert main(["train", str(dataset), "-o", str(models), *FAST_FLAGS]) == 0
        for name in ("basis.npz", "mlp.npz", "rbf.npz", "confusion_train_mlp.txt",
                     "confusion_train_rbf.txt", "config.json", "classes.txt"):
            assert (models / name).exists(), name

        report_dir = tmp_path / "report"
        assert main(["evaluate", str(dataset), str(models), "-o", str(report_dir)]) == 0
        assert (report_dir / "rates.csv").exists()
        assert (report_dir / "recognition_rates.png").exists()
