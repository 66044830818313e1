"""Command-line surface: conceal, reveal, train, evaluate, sweep.

Exit codes are stable for shell scripting: 0 success, 2 shape problems,
3 unreadable image or tensor file, 4 corrupt checkpoint, 5 bad config,
1 anything else.
"""

import argparse
import sys

from .checkpoint import load_checkpoint
from .config import load_config
from .errors import CheckpointError, ConfigError, ImageReadError, ShapeError
from .fileio import load_image, load_tensor, quantize_to_bytes, save_image, save_tensor
from .losses import LossWeights
from .metrics import compute_metrics
from .network import sample_aux
from .tensor import Tensor, no_grad
from .trainer import evaluate, format_sweep_table, sweep_lambda, train

EXIT_SHAPE = 2
EXIT_IMAGE = 3
EXIT_CHECKPOINT = 4
EXIT_CONFIG = 5


def _print_metrics(label, report):
    print(
        f"{label}: psnr={report.psnr:.4f} dB ssim={report.ssim:.6f} "
        f"rmse={report.rmse:.4f} mae={report.mae:.4f}"
    )


def _quantized(tensor):
    return Tensor(quantize_to_bytes(tensor.values).astype("float32") / 255.0)


def cmd_conceal(args):
    model = load_checkpoint(args.model)
    protected = load_image(args.protected)
    mask = load_image(args.mask)
    with no_grad():
        out = model.put_on(protected, mask)
    save_image(args.out, out.masked)
    if args.save_lost:
        save_tensor(args.save_lost, out.lost)
    # score the artifact actually written, not the float intermediate
    _print_metrics("mask vs masked", compute_metrics(mask, _quantized(out.masked)))
    return 0


def cmd_reveal(args):
    model = load_checkpoint(args.model)
    masked = load_image(args.masked)
    if args.lost is not None:
        aux = load_tensor(args.lost)
        if aux.shape != masked.shape:
            raise ShapeError(
                f"lost tensor shape {aux.shape} does not match masked image {masked.shape}"
            )
    else:
        aux = sample_aux(masked.shape, args.seed)
    with no_grad():
        back = model.put_off(masked, aux)
    save_image(args.out, back.recovered)
    if args.save_rmask:
        save_image(args.save_rmask, back.r_mask)
    if args.reference:
        reference = load_image(args.reference)
        _print_metrics(
            "reference vs recovered", compute_metrics(reference, _quantized(back.recovered))
        )
    return 0


def cmd_train(args):
    config = load_config(args.config)
    train(config, checkpoint_path=args.out, log_path=args.log,
          progress=_progress_printer(args))
    print(f"trained {config.iterations} steps; checkpoint at {args.out}, log at {args.log}")
    return 0


def _progress_printer(args):
    every = args.print_every
    if not every:
        return None

    def show(record):
        if record.iteration % every == 0:
            print(
                f"step {record.iteration}: total {record.loss_total:.6f} "
                f"psnr_mask {record.psnr_mask:.2f} psnr_rec {record.psnr_rec:.2f}",
                flush=True,
            )

    return show


def cmd_evaluate(args):
    model = load_checkpoint(args.model)
    report = evaluate(
        model,
        dataset_dir=args.data,
        seed=args.seed,
        image_size=args.image_size,
        quantize=not args.float_path,
    )
    _print_metrics("protected vs recovered", report.recovered)
    _print_metrics("mask vs masked", report.masked)
    return 0


def cmd_sweep(args):
    config = load_config(args.config)
    try:
        ratios = [LossWeights.from_string(r) for r in args.ratios.split(",")]
    except ValueError as exc:
        raise ConfigError(0, f"bad --ratios: {exc}") from exc
    results = sweep_lambda(config, ratios)
    print(format_sweep_table(results))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="invmask", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conceal", help="embed a protected image into a mask image")
    p.add_argument("--model", required=True)
    p.add_argument("--protected", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--save-lost", help="write lost-information tensor m (raw float32)")
    p.set_defaults(func=cmd_conceal)

    p = sub.add_parser("reveal", help="recover the protected image from a masked image")
    p.add_argument("--model", required=True)
    p.add_argument("--masked", required=True)
    p.add_argument("--out", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--lost", help="stored m tensor for exact recovery")
    group.add_argument("--seed", type=int, help="sample auxiliary noise with this seed")
    p.add_argument("--reference", help="protected original, to print recovery metrics")
    p.add_argument("--save-rmask", help="also write the recovered mask image")
    p.set_defaults(func=cmd_reveal)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="model.imn")
    p.add_argument("--log", default="train_log.csv")
    p.add_argument("--print-every", type=int, default=0, help="progress line interval (0 = quiet)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a model on a directory of images")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=int, default=128)
    p.add_argument("--float-path", action="store_true",
                   help="skip 8-bit quantization of outputs before scoring")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train and score one model per loss-weight ratio")
    p.add_argument("--config", required=True)
    p.add_argument("--ratios", required=True, help="comma list such as 1:1:1,1:3:1")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ShapeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except ImageReadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IMAGE
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
