"""Training loop, evaluation protocol and the loss-weight sweep.

Each step draws two disjoint image sets from the corpus (protected faces
and masks), embeds, recovers with a fresh Gaussian sample, and descends
the weighted three-term loss with Adam.  The learning rate halves every
``lr_decay_interval`` steps.  Everything is driven by one seeded
generator, so a config reproduces its run bit for bit.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .checkpoint import save_checkpoint
from .data import load_images
from .errors import NonFiniteError, TrainingError
from .fileio import quantize_to_bytes
from .losses import LossWeights, embedding_loss, low_frequency_loss, recovering_loss, total_loss
from .metrics import compute_metrics
from .network import MaskNetwork
from .tensor import Tensor, no_grad

LOG_HEADER = ("iteration", "loss_total", "loss_emb", "loss_rec", "loss_lf", "psnr_mask", "psnr_rec")


@dataclass
class TrainConfig:
    dataset_dir: str
    iterations: int
    learning_rate: float = 1e-5
    batch_size: int = 16
    lr_decay_interval: int = 1000
    weights: LossWeights = field(default_factory=LossWeights)
    image_size: int = 128
    seed: int = 0
    checkpoint_interval: int = 500
    num_blocks: int = 8
    growth: int = 32

    def __post_init__(self):
        for name in ("iterations", "learning_rate", "batch_size", "lr_decay_interval",
                     "image_size", "checkpoint_interval", "num_blocks", "growth"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.image_size % 2:
            raise ValueError(f"image_size must be even, got {self.image_size}")


@dataclass(frozen=True)
class TrainRecord:
    iteration: int
    loss_total: float
    loss_emb: float
    loss_rec: float
    loss_lf: float
    psnr_mask: float
    psnr_rec: float


@dataclass
class TrainLog:
    records: list = field(default_factory=list)

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("log iterations must be strictly increasing")
        self.records.append(record)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_HEADER)
            for r in self.records:
                writer.writerow([r.iteration, r.loss_total, r.loss_emb, r.loss_rec,
                                 r.loss_lf, r.psnr_mask, r.psnr_rec])


def learning_rate_at(step, config):
    """Step is 1-based; the rate halves after every full decay interval."""
    return config.learning_rate * 0.5 ** ((step - 1) // config.lr_decay_interval)


class Adam:
    """Standard adaptive-moment update with bias correction."""

    def __init__(self, parameters, beta1=0.9, beta2=0.999, eps=1e-8):
        self.parameters = list(parameters)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p.values) for p in self.parameters]
        self.v = [np.zeros_like(p.values) for p in self.parameters]
        self.t = 0

    def step(self, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.parameters, self.m, self.v):
            if p.grad is None:
                continue
            g = p.grad
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            p.values -= (lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.values.dtype)


def batch_psnr(a, b):
    """Per-image PSNR mean on the 0-255 scale; no SSIM, cheap enough per step."""
    diff = (np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) * 255.0
    per_rmse = np.sqrt(np.mean(diff * diff, axis=(1, 2, 3)))
    return float(np.mean([math.inf if r == 0 else 20.0 * math.log10(255.0 / r) for r in per_rmse]))


def _draw_pair_batch(images, batch_size, rng):
    idx = rng.choice(images.shape[0], size=2 * batch_size, replace=False)
    return images[idx[:batch_size]], images[idx[batch_size:]]


def train(config, model=None, images=None, checkpoint_path=None, log_path=None, progress=None):
    """Optimize a model per the config; returns (model, TrainLog).

    ``images`` may carry a preloaded (K, 3, S, S) array to skip disk I/O
    (the sweep uses this to hold out an evaluation split).  When
    ``checkpoint_path`` is set, the model is saved there every
    ``checkpoint_interval`` steps and at the end; ``log_path`` gets the
    CSV log rewritten on the same cadence.  ``progress`` is an optional
    callable receiving each TrainRecord.
    """
    if images is None:
        images = load_images(config.dataset_dir, config.image_size)
    if images.shape[0] < 2 * config.batch_size:
        raise TrainingError(
            f"need at least {2 * config.batch_size} images for disjoint batches, "
            f"found {images.shape[0]}"
        )
    if model is None:
        model = MaskNetwork(num_blocks=config.num_blocks, growth=config.growth, seed=config.seed)
    model.metadata = {
        "weights": (config.weights.lambda1, config.weights.lambda2, config.weights.lambda3),
        "iterations": config.iterations,
        "dataset": str(config.dataset_dir),
        "image_size": config.image_size,
        "seed": config.seed,
    }

    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.parameters())
    log = TrainLog()

    for step in range(1, config.iterations + 1):
        protected_v, mask_v = _draw_pair_batch(images, config.batch_size, rng)
        protected = Tensor(protected_v)
        mask = Tensor(mask_v)
        aux = Tensor(rng.standard_normal(protected_v.shape).astype(np.float32))

        try:
            out = model.put_on(protected, mask)
            back = model.put_off(out.masked, aux)
            e = embedding_loss(mask, out.masked)
            r = recovering_loss(protected, back.recovered)
            lf = low_frequency_loss(mask, out.masked)
            total, report = total_loss(e, r, lf, config.weights)
        except NonFiniteError as exc:
            raise TrainingError(f"non-finite value during step {step}: {exc}") from exc
        for term, value in (("embedding", report.embedding), ("recovering", report.recovering),
                            ("low_frequency", report.low_frequency)):
            if not math.isfinite(value):
                raise TrainingError(f"{term} loss became non-finite at step {step}")

        model.zero_grad()
        total.backward()
        optimizer.step(learning_rate_at(step, config))

        record = TrainRecord(
            iteration=step,
            loss_total=report.total,
            loss_emb=report.embedding,
            loss_rec=report.recovering,
            loss_lf=report.low_frequency,
            psnr_mask=batch_psnr(mask_v, out.masked.values),
            psnr_rec=batch_psnr(protected_v, back.recovered.values),
        )
        log.append(record)
        if progress is not None:
            progress(record)

        if step % config.checkpoint_interval == 0 or step == config.iterations:
            if checkpoint_path is not None:
                save_checkpoint(checkpoint_path, model)
            if log_path is not None:
                log.save_csv(log_path)

    return model, log


@dataclass(frozen=True)
class EvalReport:
    recovered: object
    masked: object
    per_pair_recovered: tuple
    per_pair_masked: tuple


def _average_reports(reports):
    from .metrics import MetricReport

    return MetricReport(
        psnr=float(np.mean([r.psnr for r in reports])),
        ssim=float(np.mean([r.ssim for r in reports])),
        rmse=float(np.mean([r.rmse for r in reports])),
        mae=float(np.mean([r.mae for r in reports])),
    )


def evaluate(model, dataset_dir=None, seed=0, image_size=128, images=None, quantize=True):
    """Pair up a corpus, mask and recover with sampled noise, score both sides.

    Images are shuffled by the seed and split in half into (protected, mask)
    pairs; each pair gets its own seeded Gaussian sample.  Returns averaged
    and per-pair metric reports for (protected, recovered) and (mask, masked).

    ``quantize`` rounds the masked image to 8 bits before recovery and
    scoring, matching what anyone holding the shared image actually has;
    pass False for the float-exact research path.
    """
    if images is None:
        images = load_images(dataset_dir, image_size)
    if images.shape[0] < 2:
        raise TrainingError("evaluation needs at least two images to form a pair")
    rng = np.random.default_rng(seed)
    order = rng.permutation(images.shape[0])
    half = images.shape[0] // 2
    rec_reports, mask_reports = [], []
    with no_grad():
        for i in range(half):
            protected = Tensor(images[order[i]][None])
            mask = Tensor(images[order[half + i]][None])
            out = model.put_on(protected, mask)
            masked = out.masked
            if quantize:
                masked = Tensor(quantize_to_bytes(masked.values).astype(np.float32) / 255.0)
            aux = Tensor(rng.standard_normal(protected.shape).astype(np.float32))
            back = model.put_off(masked, aux)
            recovered = back.recovered
            if quantize:
                recovered = Tensor(quantize_to_bytes(recovered.values).astype(np.float32) / 255.0)
            rec_reports.append(compute_metrics(protected, recovered))
            mask_reports.append(compute_metrics(mask, masked))
    return EvalReport(
        recovered=_average_reports(rec_reports),
        masked=_average_reports(mask_reports),
        per_pair_recovered=tuple(rec_reports),
        per_pair_masked=tuple(mask_reports),
    )


def sweep_lambda(base, ratios, eval_fraction=0.2, progress=None):
    """Train one model per weight ratio from a shared seed and data split.

    The corpus is split once: the same training images and the same held-out
    evaluation images serve every ratio, so columns differ only in weights.
    Returns a list of (LossWeights, EvalReport) in ratio order.
    """
    if not ratios:
        raise ValueError("sweep needs at least one weight ratio")
    images = load_images(base.dataset_dir, base.image_size)
    rng = np.random.default_rng(base.seed)
    order = rng.permutation(images.shape[0])
    held = max(2, int(round(eval_fraction * images.shape[0])))
    if held % 2:
        held += 1
    if images.shape[0] - held < 2 * base.batch_size:
        raise TrainingError(
            f"corpus of {images.shape[0]} too small to hold out {held} images "
            f"and still form disjoint batches of {base.batch_size}"
        )
    eval_images = images[order[:held]]
    train_images = images[order[held:]]

    results = []
    for weights in ratios:
        config = replace(base, weights=weights)
        model, _ = train(config, images=train_images, progress=progress)
        report = evaluate(model, seed=base.seed, images=eval_images)
        results.append((weights, report))
    return results


def format_sweep_table(results):
    """Rows are metrics, columns are weight ratios."""
    def ratio_label(w):
        def fmt(v):
            return f"{v:g}"
        return f"{fmt(w.lambda1)}:{fmt(w.lambda2)}:{fmt(w.lambda3)}"

    headers = [ratio_label(w) for w, _ in results]
    rows = [
        ("psnr_rec", [r.recovered.psnr for _, r in results]),
        ("ssim_rec", [r.recovered.ssim for _, r in results]),
        ("rmse_rec", [r.recovered.rmse for _, r in results]),
        ("mae_rec", [r.recovered.mae for _, r in results]),
        ("psnr_mask", [r.masked.psnr for _, r in results]),
        ("ssim_mask", [r.masked.ssim for _, r in results]),
    ]
    width = max(len(h) for h in headers + ["metric"]) + 2
    lines = ["".join(["metric".ljust(12)] + [h.rjust(width) for h in headers])]
    for name, values in rows:
        lines.append("".join([name.ljust(12)] + [f"{v:.4f}".rjust(width) for v in values]))
    return "\n".join(lines)
