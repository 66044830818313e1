"""Trainer tests: optimizer math, schedule, reproducibility, smoke training."""

import hashlib
import math

import numpy as np
import pytest

from invmask.checkpoint import load_checkpoint
from invmask.data import make_corpus, load_images
from invmask.errors import TrainingError
from invmask.losses import LossWeights
from invmask.network import MaskNetwork
from invmask.tensor import Parameter, Tensor
from invmask.trainer import (
    LOG_HEADER,
    Adam,
    TrainConfig,
    TrainLog,
    TrainRecord,
    batch_psnr,
    evaluate,
    learning_rate_at,
    sweep_lambda,
    train,
)


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    make_corpus(root, count=12, size=24, seed=7)
    return root


def tiny_config(corpus, **overrides):
    base = dict(
        dataset_dir=str(corpus), iterations=3, learning_rate=1e-3, batch_size=2,
        lr_decay_interval=2, image_size=24, seed=3, checkpoint_interval=2,
        num_blocks=1, growth=4,
    )
    base.update(overrides)
    return TrainConfig(**base)


class TestSchedule:
    def test_halving_boundaries(self):
        cfg = TrainConfig(dataset_dir="d", iterations=1, learning_rate=1e-5, lr_decay_interval=1000)
        assert learning_rate_at(1, cfg) == 1e-5
        assert learning_rate_at(1000, cfg) == 1e-5
        assert learning_rate_at(1001, cfg) == 1e-5 * 0.5
        assert learning_rate_at(2000, cfg) == 1e-5 * 0.5
        assert learning_rate_at(3001, cfg) == 1e-5 * 0.5**3

    def test_exact_powers(self):
        cfg = TrainConfig(dataset_dir="d", iterations=1, learning_rate=2.0, lr_decay_interval=5)
        for k in range(6):
            assert learning_rate_at(5 * k + 1, cfg) == 2.0 * 0.5**k


class TestAdam:
    def test_two_steps_match_hand_formula(self):
        p = Parameter(np.full((1, 1, 1, 1), 1.0, dtype=np.float32), "w")
        opt = Adam([p])
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8

        # step 1, gradient 0.5
        p.grad = np.full((1, 1, 1, 1), 0.5, dtype=np.float32)
        opt.step(lr)
        m = 0.1 * 0.5
        v = 0.001 * 0.25
        w = 1.0 - lr * (m / 0.1) / (math.sqrt(v / 0.001) + eps)
        assert abs(p.values[0, 0, 0, 0] - w) < 1e-6

        # step 2, gradient -0.25
        p.grad = np.full((1, 1, 1, 1), -0.25, dtype=np.float32)
        opt.step(lr)
        m = 0.9 * m + 0.1 * (-0.25)
        v = 0.999 * v + 0.001 * 0.0625
        w -= lr * (m / (1 - 0.9**2)) / (math.sqrt(v / (1 - 0.999**2)) + eps)
        assert abs(p.values[0, 0, 0, 0] - w) < 1e-6

    def test_minimizes_quadratic(self):
        p = Parameter(np.full((1, 1, 1, 1), 5.0, dtype=np.float32), "w")
        opt = Adam([p])
        for _ in range(400):
            diff = p - 3.0
            loss = (diff * diff).mean()
            p.grad = None
            loss.backward()
            opt.step(0.05)
        assert abs(p.values[0, 0, 0, 0] - 3.0) < 1e-2

    def test_skips_parameters_without_grads(self):
        p = Parameter(np.ones((1, 1, 1, 1), dtype=np.float32), "w")
        Adam([p]).step(0.1)
        assert p.values[0, 0, 0, 0] == 1.0


class TestTrainLog:
    def test_strictly_increasing(self):
        log = TrainLog()
        log.append(TrainRecord(1, 1, 1, 1, 1, 1, 1))
        with pytest.raises(ValueError):
            log.append(TrainRecord(1, 2, 2, 2, 2, 2, 2))

    def test_csv_format(self, tmp_path):
        log = TrainLog()
        log.append(TrainRecord(1, 0.5, 0.1, 0.1, 0.3, 40.0, 20.0))
        path = tmp_path / "log.csv"
        log.save_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(LOG_HEADER)
        assert lines[1].startswith("1,0.5,0.1,0.1,0.3,")


class TestTraining:
    def test_smoke_run_writes_artifacts(self, corpus, tmp_path):
        cfg = tiny_config(corpus, iterations=4)
        ckpt = tmp_path / "model.imn"
        log_path = tmp_path / "log.csv"
        model, log = train(cfg, checkpoint_path=ckpt, log_path=log_path)
        assert len(log.records) == 4
        assert [r.iteration for r in log.records] == [1, 2, 3, 4]
        assert all(math.isfinite(r.loss_total) for r in log.records)
        loaded = load_checkpoint(ckpt)
        for (na, a), (nb, b) in zip(model.named_parameters(), loaded.named_parameters()):
            np.testing.assert_array_equal(a.values, b.values)
        assert log_path.read_text().startswith(",".join(LOG_HEADER))

    def test_reproducible_given_seed(self, corpus):
        cfg = tiny_config(corpus)
        _, log_a = train(cfg)
        _, log_b = train(cfg)
        assert log_a.records == log_b.records

    def test_seed_changes_run(self, corpus):
        _, log_a = train(tiny_config(corpus, seed=1))
        _, log_b = train(tiny_config(corpus, seed=2))
        assert log_a.records != log_b.records

    def test_identity_init_first_step_recovering_loss(self, corpus):
        # fresh network passes aux noise straight through, so the first
        # recovering loss is just MSE(protected batch, noise batch)
        cfg = tiny_config(corpus, iterations=1)
        images = load_images(cfg.dataset_dir, cfg.image_size)
        _, log = train(cfg, images=images)

        rng = np.random.default_rng(cfg.seed)
        idx = rng.choice(images.shape[0], size=2 * cfg.batch_size, replace=False)
        protected = images[idx[: cfg.batch_size]]
        aux = rng.standard_normal(protected.shape).astype(np.float32)
        expected = float(np.mean((protected - aux) ** 2))
        assert abs(log.records[0].loss_rec - expected) < 1e-4

    def test_dataset_too_small(self, corpus):
        with pytest.raises(TrainingError, match="at least"):
            train(tiny_config(corpus, batch_size=8))

    def test_non_finite_aborts_with_diagnostic(self, corpus):
        cfg = tiny_config(corpus, iterations=2)
        model = MaskNetwork(num_blocks=1, growth=4, seed=0)
        model.blocks[0].phi.weights[0].values[:] = np.nan
        with pytest.raises(TrainingError, match="step 1"):
            train(cfg, model=model)

    def test_never_mutates_dataset(self, corpus):
        def digest():
            hasher = hashlib.sha256()
            for p in sorted(corpus.iterdir()):
                hasher.update(p.read_bytes())
            return hasher.hexdigest()

        before = digest()
        train(tiny_config(corpus))
        assert digest() == before

    def test_loss_decreases_at_small_scale(self, corpus):
        cfg = tiny_config(corpus, iterations=60, learning_rate=5e-4, lr_decay_interval=60,
                          num_blocks=1, growth=8)
        _, log = train(cfg)
        first = np.mean([r.loss_total for r in log.records[:10]])
        last = np.mean([r.loss_total for r in log.records[-10:]])
        assert last < first


class TestEvaluate:
    def test_identity_model_masked_psnr_is_infinite(self, corpus):
        model = MaskNetwork(num_blocks=2, growth=4, seed=0)
        report = evaluate(model, dataset_dir=str(corpus), seed=5, image_size=24)
        assert report.masked.psnr == math.inf
        assert report.masked.ssim == 1.0
        assert len(report.per_pair_masked) == 6

    def test_float_path_reports_finite_psnr(self, corpus):
        model = MaskNetwork(num_blocks=2, growth=4, seed=0)
        report = evaluate(model, dataset_dir=str(corpus), seed=5, image_size=24, quantize=False)
        assert math.isfinite(report.masked.psnr)
        assert report.masked.psnr > 100.0

    def test_deterministic(self, corpus):
        model = MaskNetwork(num_blocks=1, growth=4, seed=0)
        a = evaluate(model, dataset_dir=str(corpus), seed=5, image_size=24)
        b = evaluate(model, dataset_dir=str(corpus), seed=5, image_size=24)
        assert a.recovered == b.recovered
        assert a.masked == b.masked

    def test_needs_two_images(self):
        model = MaskNetwork(num_blocks=1, growth=4, seed=0)
        with pytest.raises(TrainingError):
            evaluate(model, images=np.zeros((1, 3, 24, 24), dtype=np.float32))


class TestSweep:
    def test_single_ratio_runs(self, corpus):
        cfg = tiny_config(corpus, iterations=2)
        results = sweep_lambda(cfg, [LossWeights(1, 3, 1)], eval_fraction=0.3)
        assert len(results) == 1
        weights, report = results[0]
        assert weights == LossWeights(1, 3, 1)
        assert math.isfinite(report.recovered.psnr)

    def test_shared_split_across_ratios(self, corpus):
        # both ratios trained: identical pipeline except the weights
        cfg = tiny_config(corpus, iterations=2)
        results = sweep_lambda(cfg, [LossWeights(1, 1, 1), LossWeights(1, 3, 1)], eval_fraction=0.3)
        assert len(results) == 2
        assert results[0][0] == LossWeights(1, 1, 1)

    def test_empty_ratio_list(self, corpus):
        with pytest.raises(ValueError):
            sweep_lambda(tiny_config(corpus), [])


class TestBatchPsnr:
    def test_matches_direct_formula(self):
        rng = np.random.default_rng(0)
        a, b = rng.random((3, 3, 8, 8)), rng.random((3, 3, 8, 8))
        per = []
        for i in range(3):
            rmse = np.sqrt(np.mean(((a[i] - b[i]) * 255.0) ** 2))
            per.append(20 * math.log10(255.0 / rmse))
        assert abs(batch_psnr(a, b) - np.mean(per)) < 1e-9

    def test_identical_is_infinite(self):
        x = np.ones((1, 3, 4, 4))
        assert batch_psnr(x, x) == math.inf
