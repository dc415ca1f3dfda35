import dataclasses

import numpy as np
import pytest

from facefuse.classifiers import (
    LabeledSample,
    MlpModel,
    RbfModel,
    TrainConfig,
    classify,
    classify_many,
    load_mlp,
    load_rbf,
    mlp_loss_and_grads,
    save_mlp,
    save_rbf,
    train_mlp,
    train_rbf,
)
from facefuse.errors import TrainingError


def make_samples(X, labels):
    return [LabeledSample(x, int(l)) for x, l in zip(X, labels)]


def random_dataset(rng, n_classes=3, per_class=5, dim=4, spread=4.0):
    X, labels = [], []
    for cls in range(1, n_classes + 1):
        center = rng.standard_normal(dim) * spread
        X.extend(center + rng.standard_normal((per_class, dim)) * 0.3)
        labels.extend([cls] * per_class)
    return np.array(X), np.array(labels)


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.hidden_units == 64 and cfg.epochs == 500
        assert cfg.reject_threshold == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hidden_units": 0},
            {"learning_rate": 0.0},
            {"momentum": 1.0},
            {"epochs": 0},
            {"reject_threshold": 1.0},
            {"rbf_centers_per_class": 0},
            {"rbf_ridge": -1.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestMlpGradients:
    def test_analytic_matches_central_differences(self):
        rng = np.random.default_rng(21)
        for _ in range(3):
            k, h, n, b = 3, 4, 3, 3
            X = rng.standard_normal((b, k))
            onehot = np.eye(n)[rng.integers(0, n, b)]
            params = [
                rng.uniform(-0.5, 0.5, (k, h)),
                rng.uniform(-0.5, 0.5, h),
                rng.uniform(-0.5, 0.5, (h, n)),
                rng.uniform(-0.5, 0.5, n),
            ]
            _, grads = mlp_loss_and_grads(*params, X, onehot)
            eps = 1e-6
            for p, g in zip(params, grads):
                flat_p, flat_g = p.ravel(), g.ravel()
                for idx in rng.choice(flat_p.size, size=min(8, flat_p.size), replace=False):
                    orig = flat_p[idx]
                    flat_p[idx] = orig + eps
                    up, _ = mlp_loss_and_grads(*params, X, onehot)
                    flat_p[idx] = orig - eps
                    down, _ = mlp_loss_and_grads(*params, X, onehot)
                    flat_p[idx] = orig
                    numeric = (up - down) / (2 * eps)
                    denom = max(abs(numeric), abs(flat_g[idx]), 1e-8)
                    assert abs(numeric - flat_g[idx]) / denom < 1e-5


class TestTrainMlp:
    def test_xor_reaches_full_training_accuracy(self):
        # documented converging seeds for this configuration
        X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        labels = np.array([1, 1, 2, 2])
        for seed in (0, 1, 2):
            cfg = TrainConfig(hidden_units=4, learning_rate=0.5, epochs=2000, seed=seed)
            model = train_mlp(make_samples(X, labels), 2, cfg)
            assert model.train_accuracy == 1.0, f"seed {seed}"

    def test_single_class_always_wins(self):
        rng = np.random.default_rng(22)
        X = rng.standard_normal((5, 3))
        model = train_mlp(make_samples(X, np.ones(5)), 1, TrainConfig(epochs=50))
        assert np.all(classify_many(model, X) == 1)

    def test_missing_class_rejected(self):
        X = np.zeros((3, 2))
        with pytest.raises(TrainingError):
            train_mlp(make_samples(X, [1, 1, 1]), 2, TrainConfig(epochs=10))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(23)
        X, labels = random_dataset(rng)
        cfg = TrainConfig(hidden_units=8, epochs=100, seed=77)
        m1 = train_mlp(make_samples(X, labels), 3, cfg)
        m2 = train_mlp(make_samples(X, labels), 3, cfg)
        for a, b in ((m1.w1, m2.w1), (m1.b1, m2.b1), (m1.w2, m2.w2), (m1.b2, m2.b2)):
            assert a.tobytes() == b.tobytes()

    def test_scores_form_distribution(self):
        rng = np.random.default_rng(24)
        X, labels = random_dataset(rng)
        model = train_mlp(make_samples(X, labels), 3, TrainConfig(epochs=50))
        scores = model.predict_scores(rng.standard_normal((10, 4)))
        assert np.all(scores >= 0)
        np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-9)


class TestTrainRbf:
    def test_exact_interpolation_with_all_centers(self):
        rng = np.random.default_rng(25)
        X, labels = random_dataset(rng, n_classes=3, per_class=4, spread=8.0)
        cfg = TrainConfig(rbf_centers_per_class=4, rbf_ridge=0.0)
        model = train_rbf(make_samples(X, labels), 3, cfg)
        onehot = np.eye(3)[labels - 1]
        raw = model.activations(X) @ model.weights
        assert np.abs(raw - onehot).max() < 1e-6

    def test_nearest_center_dominates(self):
        X = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 10.0], [10.1, 10.0]])
        labels = [1, 1, 2, 2]
        model = train_rbf(make_samples(X, labels), 2, TrainConfig(rbf_centers_per_class=1))
        label, _ = classify(model, np.array([1.0, 1.0]))
        assert label == 1

    def test_ridge_shrinks_weights(self):
        rng = np.random.default_rng(26)
        X, labels = random_dataset(rng, per_class=6)
        norms = []
        for lam in (1e-8, 1e-4, 1e-2, 1.0, 100.0):
            cfg = TrainConfig(rbf_centers_per_class=6, rbf_ridge=lam)
            model = train_rbf(make_samples(X, labels), 3, cfg)
            norms.append(np.linalg.norm(model.weights))
        assert all(a >= b - 1e-9 for a, b in zip(norms, norms[1:]))

    def test_too_few_samples_per_class(self):
        rng = np.random.default_rng(27)
        X, labels = random_dataset(rng, per_class=2)
        with pytest.raises(TrainingError):
            train_rbf(make_samples(X, labels), 3, TrainConfig(rbf_centers_per_class=3))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(28)
        X, labels = random_dataset(rng, per_class=6)
        cfg = TrainConfig(rbf_centers_per_class=2, seed=5)
        m1 = train_rbf(make_samples(X, labels), 3, cfg)
        m2 = train_rbf(make_samples(X, labels), 3, cfg)
        assert m1.centers.tobytes() == m2.centers.tobytes()
        assert m1.weights.tobytes() == m2.weights.tobytes()

    def test_scores_form_distribution_even_when_clamped(self):
        rng = np.random.default_rng(29)
        X, labels = random_dataset(rng)
        model = train_rbf(make_samples(X, labels), 3, TrainConfig(rbf_centers_per_class=1))
        scores = model.predict_scores(rng.standard_normal((20, 4)) * 50.0)
        assert np.all(scores >= 0)
        np.testing.assert_allclose(scores.sum(axis=1), 1.0, atol=1e-9)


@dataclasses.dataclass
class _StubModel:
    fixed: np.ndarray

    @property
    def n_classes(self):
        return self.fixed.size

    def predict_scores(self, features):
        return np.tile(self.fixed, (np.atleast_2d(features).shape[0], 1))


class TestClassify:
    def test_zero_threshold_never_rejects(self):
        model = _StubModel(np.array([0.4, 0.35, 0.25]))
        label, _ = classify(model, np.zeros(3), tau=0.0)
        assert label == 1

    def test_threshold_rejects_low_confidence(self):
        model = _StubModel(np.array([0.6, 0.4]))
        label, scores = classify(model, np.zeros(2), tau=0.7)
        assert label == 3  # N+1
        np.testing.assert_allclose(scores, [0.6, 0.4])

    def test_tie_goes_to_lowest_index(self):
        model = _StubModel(np.array([0.5, 0.5]))
        label, _ = classify(model, np.zeros(2), tau=0.0)
        assert label == 1

    def test_acceptance_shrinks_as_threshold_rises(self):
        rng = np.random.default_rng(30)
        X, labels = random_dataset(rng)
        model = train_mlp(make_samples(X, labels), 3, TrainConfig(epochs=100))
        queries = rng.standard_normal((40, 4))
        previous = None
        for tau in (0.0, 0.3, 0.5, 0.7, 0.9):
            accepted = {i for i, l in enumerate(classify_many(model, queries, tau)) if l <= 3}
            if previous is not None:
                assert accepted <= previous
            previous = accepted

    def test_feature_length_checked(self):
        rng = np.random.default_rng(31)
        X, labels = random_dataset(rng)
        model = train_mlp(make_samples(X, labels), 3, TrainConfig(epochs=10))
        with pytest.raises(ValueError):
            classify(model, np.zeros(9))


class TestPersistence:
    def test_mlp_round_trip(self, tmp_path):
        rng = np.random.default_rng(32)
        X, labels = random_dataset(rng)
        model = train_mlp(make_samples(X, labels), 3, TrainConfig(epochs=20))
        save_mlp(model, tmp_path / "m.npz")
        back = load_mlp(tmp_path / "m.npz")
        assert isinstance(back, MlpModel)
        np.testing.assert_array_equal(back.w1, model.w1)
        np.testing.assert_array_equal(back.b2, model.b2)
        assert back.train_accuracy == model.train_accuracy

    def test_rbf_round_trip(self, tmp_path):
        rng = np.random.default_rng(33)
        X, labels = random_dataset(rng)
        model = train_rbf(make_samples(X, labels), 3, TrainConfig())
        save_rbf(model, tmp_path / "r.npz")
        back = load_rbf(tmp_path / "r.npz")
        assert isinstance(back, RbfModel)
        np.testing.assert_array_equal(back.centers, model.centers)
        np.testing.assert_array_equal(back.weights, model.weights)
