"""Generate a synthetic training corpus of smooth procedural images.

Usage:
    python3 scripts/make_dataset.py --out data/desk --count 240 --size 128 --seed 777
"""

import argparse

from invmask.data import make_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--count", type=int, default=240)
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=777)
    args = parser.parse_args()
    root = make_corpus(args.out, args.count, args.size, args.seed)
    print(f"wrote {args.count} images of {args.size}x{args.size} to {root}")


if __name__ == "__main__":
    main()
