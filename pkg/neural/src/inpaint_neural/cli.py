"""Command line for training and exporting the optimisation networks.

Exports follow the evaluator's sweep naming convention
``{image}_{masknet|tonalnet}_{density_percent}.pgm/.tonal`` so a directory of
exports can be consumed directly via ``inpaint-opt sweep --neural-dir``.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch

from inpaint_opt import load_image
from inpaint_opt.harness import density_tag

from .data import SyntheticCorpus
from .export import export_mask, export_tonal, predict_mask
from .train import MaskedCorpus, TrainConfig, train_mask_net, train_tonal_net
from .unet import mask_network, tonal_network


def _config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        density=args.density,
        epochs=args.epochs,
        batch_size=args.batch_size,
        crop_size=args.crop_size,
        learning_rate=args.learning_rate,
        alpha=args.alpha,
        base_width=args.width,
        rng_seed=args.seed,
    )


def _cmd_train_mask(args: argparse.Namespace) -> int:
    config = _config(args)
    train_set = SyntheticCorpus(args.train_images, config.crop_size, start=0)
    val_set = SyntheticCorpus(args.val_images, config.crop_size, start=args.train_images)
    result = train_mask_net(train_set, val_set, config, variant=args.variant,
                            log_path=args.log)
    torch.save({
        "kind": "mask",
        "variant": args.variant,
        "base_width": config.base_width,
        "density": config.density,
        "state": result.model_state,
    }, args.out)
    print(f"best_epoch={result.best_epoch} val_loss={result.best_val_loss:.6g} out={args.out}")
    return 0


def _cmd_train_tonal(args: argparse.Namespace) -> int:
    config = _config(args)
    train_set = MaskedCorpus(args.train_images, config.density, config.crop_size, start=0)
    val_set = MaskedCorpus(args.val_images, config.density, config.crop_size,
                           start=args.train_images)
    result = train_tonal_net(train_set, val_set, config, log_path=args.log)
    torch.save({
        "kind": "tonal",
        "base_width": config.base_width,
        "density": config.density,
        "state": result.model_state,
    }, args.out)
    print(f"best_epoch={result.best_epoch} val_loss={result.best_val_loss:.6g} out={args.out}")
    return 0


def load_model(path: str | Path):
    payload = torch.load(path, weights_only=True)
    if payload["kind"] == "mask":
        model = mask_network(payload["base_width"])
    else:
        model = tonal_network(payload["base_width"])
    model.load_state_dict(payload["state"])
    model.eval()
    return model, payload


def _cmd_export(args: argparse.Namespace) -> int:
    model, payload = load_model(args.model)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    density = args.density if args.density is not None else payload["density"]
    tag = density_tag(density)
    images = sorted(
        p for p in Path(args.images).iterdir()
        if p.suffix.lower() in (".pgm", ".ppm")
    )
    if not images:
        raise ValueError(f"no PGM/PPM images in {args.images}")
    mask_model = None
    if payload["kind"] == "tonal":
        if args.mask_model is None:
            raise ValueError("tonal export needs --mask-model to place the mask pixels")
        mask_model, _ = load_model(args.mask_model)
    written = 0
    for path in images:
        image = load_image(path)
        if payload["kind"] == "mask":
            export_mask(model, image, density, args.seed,
                        out_dir / f"{path.stem}_masknet_{tag}.pgm")
        else:
            mask = predict_mask(mask_model, image, density, args.seed)
            export_tonal(model, image, mask,
                         out_dir / f"{path.stem}_tonalnet_{tag}.tonal")
        written += 1
    print(f"exported={written} dir={out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inpaint-neural",
        description="Train and export learned data-optimisation networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_training_options(p, epochs):
        p.add_argument("--density", type=float, default=0.1)
        p.add_argument("--epochs", type=int, default=epochs)
        p.add_argument("--batch-size", dest="batch_size", type=int, default=16)
        p.add_argument("--crop-size", dest="crop_size", type=int, default=64)
        p.add_argument("--learning-rate", dest="learning_rate", type=float, default=5e-5)
        p.add_argument("--alpha", type=float, default=1e-4)
        p.add_argument("--width", type=int, default=64, help="base channel width")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--train-images", dest="train_images", type=int, default=2000)
        p.add_argument("--val-images", dest="val_images", type=int, default=128)
        p.add_argument("--log", help="training log CSV path")
        p.add_argument("--out", required=True, help="model checkpoint path")

    train_mask = sub.add_parser("train-mask", help="train a spatial optimisation network")
    train_mask.add_argument("--variant", choices=("nonbinary", "quantise", "coinflip"),
                            default="nonbinary")
    add_training_options(train_mask, epochs=50)
    train_mask.set_defaults(handler=_cmd_train_mask)

    train_tonal = sub.add_parser("train-tonal", help="train a tonal optimisation network")
    add_training_options(train_tonal, epochs=100)
    train_tonal.set_defaults(handler=_cmd_train_tonal)

    export = sub.add_parser("export", help="export masks or TONAL files for an image directory")
    export.add_argument("--model", required=True)
    export.add_argument("--mask-model", dest="mask_model",
                        help="mask checkpoint used to place pixels for tonal export")
    export.add_argument("--images", required=True, help="directory of PGM/PPM images")
    export.add_argument("--out-dir", dest="out_dir", required=True)
    export.add_argument("--density", type=float)
    export.add_argument("--seed", type=int, default=0)
    export.set_defaults(handler=_cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
