"""Loss-weight ratio study: train one model per ratio across several seeds.

For each seed, every ratio shares the same data split and initialization;
the table reports the per-ratio median of held-out recovered-image PSNR
across seeds.

Usage:
    python3 scripts/sweep_ratios.py --data data/desk --ratios 1:1:1,1:3:1 \
        --iterations 400 --seeds 1,2,3 --image-size 64 --num-blocks 2 --growth 8
"""

import argparse
import statistics
import sys

from invmask.losses import LossWeights
from invmask.trainer import TrainConfig, format_sweep_table, sweep_lambda


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True)
    parser.add_argument("--ratios", default="1:1:1,1:3:1")
    parser.add_argument("--seeds", default="1,2,3")
    parser.add_argument("--iterations", type=int, default=400)
    parser.add_argument("--learning-rate", type=float, default=2e-4)
    parser.add_argument("--batch-size", type=int, default=4)
    parser.add_argument("--image-size", type=int, default=64)
    parser.add_argument("--num-blocks", type=int, default=2)
    parser.add_argument("--growth", type=int, default=8)
    args = parser.parse_args(argv)

    ratios = [LossWeights.from_string(r) for r in args.ratios.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]

    per_ratio = {i: [] for i in range(len(ratios))}
    for seed in seeds:
        config = TrainConfig(
            dataset_dir=args.data,
            iterations=args.iterations,
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            lr_decay_interval=max(1, args.iterations),
            image_size=args.image_size,
            seed=seed,
            num_blocks=args.num_blocks,
            growth=args.growth,
        )
        results = sweep_lambda(config, ratios)
        print(f"seed {seed}:")
        print(format_sweep_table(results))
        for i, (_, report) in enumerate(results):
            per_ratio[i].append(report.recovered.psnr)

    print("\nmedian recovered PSNR across seeds:")
    for i, weights in enumerate(ratios):
        med = statistics.median(per_ratio[i])
        label = f"{weights.lambda1:g}:{weights.lambda2:g}:{weights.lambda3:g}"
        print(f"  {label:>8}  {med:.3f} dB")
    return 0


if __name__ == "__main__":
    sys.exit(main())
