import numpy as np
import pytest

from wmhseg.errors import ContractError, DivergenceError
from wmhseg.net.training import TrainConfig, backward, train
from wmhseg.net.unet import build_unet, forward


def blob_dataset(n=8, side=16, seed=0):
    """Tiny synthetic slices: a bright square on channel 0 marks the target."""
    rng = np.random.default_rng(seed)
    samples = rng.normal(0, 0.1, (n, 2, side, side)).astype(np.float32)
    truth = np.zeros((n, side, side), bool)
    for i in range(n):
        r, c = rng.integers(2, side - 6, 2)
        samples[i, 0, r : r + 4, c : c + 4] += 2.0
        truth[i, r : r + 4, c : c + 4] = True
    return samples, truth


class TestTrainConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.batch_size == 30
        assert cfg.learning_rate == pytest.approx(2e-4)
        assert cfg.epochs == 50
        assert cfg.smooth == 1.0

    def test_validation(self):
        with pytest.raises(ContractError):
            TrainConfig(batch_size=0)
        with pytest.raises(ContractError):
            TrainConfig(learning_rate=-1.0)


class TestBackward:
    def test_loss_in_range(self):
        spec = build_unet(base_width=2)
        from wmhseg.net.unet import init_weights
        weights = init_weights(spec, np.random.default_rng(0))
        samples, truth = blob_dataset(2)
        loss, grads = backward(spec, weights, samples, truth)
        assert -1.0 <= loss < 0.0
        assert len(grads) == len(weights)
        assert all(np.isfinite(g).all() for dw_db in grads for g in dw_db)


class TestTrain:
    def test_loss_decreases(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(8)
        cfg = TrainConfig(batch_size=8, learning_rate=2e-3, epochs=8, seed=0)
        _, history = train(spec, samples, truth, cfg)
        assert history["train_loss"][-1] < history["train_loss"][0]

    def test_deterministic_given_seed(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(6)
        cfg = TrainConfig(batch_size=6, learning_rate=1e-3, epochs=3, seed=42)
        w1, h1 = train(spec, samples, truth, cfg)
        w2, h2 = train(spec, samples, truth, cfg)
        assert h1["train_loss"] == h2["train_loss"]
        for (a, ab), (b, bb) in zip(w1, w2):
            np.testing.assert_array_equal(a, b)
            np.testing.assert_array_equal(ab, bb)

    def test_seed_changes_outcome(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(6)
        _, h1 = train(spec, samples, truth,
                      TrainConfig(batch_size=6, epochs=2, seed=0))
        _, h2 = train(spec, samples, truth,
                      TrainConfig(batch_size=6, epochs=2, seed=1))
        assert h1["train_loss"] != h2["train_loss"]

    def test_validation_history(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(8)
        cfg = TrainConfig(batch_size=4, epochs=3, seed=0)
        _, history = train(spec, samples[:6], truth[:6], cfg,
                           validation=(samples[6:], truth[6:]))
        assert len(history["val_loss"]) == 3
        assert all(-1.0 <= v < 0.0 for v in history["val_loss"])

    def test_stop_loss_ends_early(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(8)
        cfg = TrainConfig(batch_size=8, learning_rate=2e-3, epochs=50,
                          seed=0, stop_loss=-0.2)
        _, history = train(spec, samples, truth, cfg)
        assert len(history["train_loss"]) < 50
        assert history["train_loss"][-1] < -0.2

    def test_divergence_raised_at_high_learning_rate(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(8, seed=3)
        cfg = TrainConfig(batch_size=8, learning_rate=0.1, epochs=30, seed=0)
        with pytest.raises(DivergenceError) as exc_info:
            train(spec, samples, truth, cfg)
        assert len(exc_info.value.loss_trace) >= 1

    def test_empty_dataset_rejected(self):
        spec = build_unet(base_width=2)
        with pytest.raises(ContractError):
            train(spec, np.zeros((0, 2, 16, 16)), np.zeros((0, 16, 16)),
                  TrainConfig(epochs=1))

    def test_mismatched_truth_rejected(self):
        spec = build_unet(base_width=2)
        samples, truth = blob_dataset(4)
        with pytest.raises(ContractError):
            train(spec, samples, truth[:3], TrainConfig(epochs=1))

    def test_trained_model_predicts_better_than_init(self):
        spec = build_unet(base_width=4)
        samples, truth = blob_dataset(10, seed=5)
        cfg = TrainConfig(batch_size=10, learning_rate=5e-3, epochs=30, seed=0)
        weights, _ = train(spec, samples, truth, cfg)
        pred = forward(spec, weights, samples) > 0.5
        tp = (pred & truth).sum()
        dsc = 2 * tp / (pred.sum() + truth.sum() + 1e-9)
        assert dsc > 0.5
