"""Desk-scale training run: the full 8-block network at 128x128.

Trains on a seeded synthetic corpus and writes the checkpoint plus CSV log
under artifacts/acceptance/.  The whole recipe lives in DESK below so the
test suite can rebuild the exact corpus and splits when scoring the
artifact (or retraining it from scratch if it is absent).

Usage:
    python3 scripts/train_desk.py                 # full run
    python3 scripts/train_desk.py --iterations 50 # quick look
"""

import argparse
import sys
import tempfile
import time
from pathlib import Path

from invmask.data import load_images, make_corpus
from invmask.losses import LossWeights
from invmask.trainer import TrainConfig, evaluate, train

REPO = Path(__file__).resolve().parents[1]
ARTIFACT_DIR = REPO / "artifacts" / "acceptance"

# one place defines the desk recipe: corpus, split, model size, optimization
DESK = dict(
    corpus_seed=777,
    corpus_count=240,
    image_size=128,
    train_count=200,
    num_blocks=8,
    growth=32,
    batch_size=2,
    learning_rate=2e-4,
    lr_decay_interval=1000,
    iterations=3000,
    seed=42,
)


def desk_corpus(root=None):
    """Build (or reuse) the corpus and return (train_images, eval_images)."""
    if root is None:
        root = Path(tempfile.gettempdir()) / f"invmask_desk_{DESK['corpus_seed']}"
    root = Path(root)
    expected = DESK["corpus_count"]
    if not root.is_dir() or len(list(root.glob("*.png"))) != expected:
        make_corpus(root, expected, DESK["image_size"], DESK["corpus_seed"])
    images = load_images(root, DESK["image_size"])
    return images[: DESK["train_count"]], images[DESK["train_count"] :]


def desk_config(dataset_dir, iterations=None, learning_rate=None, seed=None):
    return TrainConfig(
        dataset_dir=str(dataset_dir),
        iterations=iterations or DESK["iterations"],
        learning_rate=learning_rate or DESK["learning_rate"],
        batch_size=DESK["batch_size"],
        lr_decay_interval=DESK["lr_decay_interval"],
        weights=LossWeights(1, 3, 1),
        image_size=DESK["image_size"],
        seed=DESK["seed"] if seed is None else seed,
        checkpoint_interval=100,
        num_blocks=DESK["num_blocks"],
        growth=DESK["growth"],
    )


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iterations", type=int, default=None)
    parser.add_argument("--out-dir", default=str(ARTIFACT_DIR))
    parser.add_argument("--corpus-dir", default=None)
    parser.add_argument("--resume", action="store_true",
                        help="continue from the existing checkpoint in --out-dir")
    parser.add_argument("--learning-rate", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None,
                        help="batch-sampling seed override (fresh order on resume)")
    parser.add_argument("--log-name", default="train_log.csv")
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_images, eval_images = desk_corpus(args.corpus_dir)
    config = desk_config("(preloaded)", args.iterations, args.learning_rate, args.seed)

    model = None
    if args.resume:
        from invmask.checkpoint import load_checkpoint

        model = load_checkpoint(out_dir / "model.imn")
        print(f"resuming from {out_dir / 'model.imn'}")

    start = time.time()

    def progress(record):
        if record.iteration % 25 == 0 or record.iteration == 1:
            print(
                f"step {record.iteration:5d}  total {record.loss_total:.6f}  "
                f"emb {record.loss_emb:.6f}  rec {record.loss_rec:.6f}  "
                f"lf {record.loss_lf:.6f}  psnr_mask {record.psnr_mask:6.2f}  "
                f"psnr_rec {record.psnr_rec:6.2f}  [{time.time() - start:7.0f}s]",
                flush=True,
            )

    model, _ = train(
        config,
        model=model,
        images=train_images,
        checkpoint_path=out_dir / "model.imn",
        log_path=out_dir / args.log_name,
        progress=progress,
    )
    report = evaluate(model, images=eval_images, seed=DESK["seed"])
    print(f"held-out recovered: {report.recovered}")
    print(f"held-out masked:    {report.masked}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
