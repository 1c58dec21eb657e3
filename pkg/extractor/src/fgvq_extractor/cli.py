"""Command-line surface: feature extraction and model export."""

from __future__ import annotations

import argparse
import json
import sys

from . import encoder, export
from .errors import ExtractorError


def cmd_extract(args: argparse.Namespace) -> int:
    features, manifest = encoder.extract_features(
        args.input, frames=args.frames, out_path=args.out,
        weights=args.weights, random_init_seed=args.seed if args.random_init else None)
    sys.stdout.write(json.dumps({
        "out": args.out,
        "shape": list(features.shape),
        "manifest": args.out + ".json",
    }) + "\n")
    return 0


def cmd_export_model(args: argparse.Namespace) -> int:
    if (args.seed is None) == (args.checkpoint is None):
        sys.stderr.write("error: give exactly one of --seed or --checkpoint\n")
        return 2
    entries = export.export_model(
        args.out, seed=None if args.checkpoint else args.seed,
        checkpoint=args.checkpoint, channels=args.channels,
        hidden1=args.hidden1, hidden2=args.hidden2)
    sys.stdout.write(json.dumps({"out": args.out, "entries": len(entries)}) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fgvq-extract",
        description="CLIP ViT-B/16 feature and model exporter for the fgvq engine")
    sub = parser.add_subparsers(dest="command", required=True)

    extract_p = sub.add_parser("extract", help="encode sampled frames to a .fgt tensor")
    extract_p.add_argument("--input", required=True,
                           help=".y4m clip or image-sequence glob")
    extract_p.add_argument("--out", required=True, help="output .fgt path")
    extract_p.add_argument("--frames", type=int, default=16, metavar="T")
    source = extract_p.add_mutually_exclusive_group(required=True)
    source.add_argument("--weights", help="local pretrained encoder checkpoint")
    source.add_argument("--random-init", action="store_true",
                        help="seeded random encoder (testing / air-gapped use)")
    extract_p.add_argument("--seed", type=int, default=0,
                           help="seed for --random-init (default 0)")
    extract_p.set_defaults(func=cmd_extract)

    model_p = sub.add_parser("export-model", help="write a .fgb model bundle")
    model_p.add_argument("--out", required=True, help="output .fgb path")
    model_p.add_argument("--seed", type=int, default=None,
                         help="random-init seed (alternative to --checkpoint)")
    model_p.add_argument("--checkpoint", default=None,
                         help="torch checkpoint with canonical entry names")
    model_p.add_argument("--channels", type=int, default=export.DEFAULT_CHANNELS)
    model_p.add_argument("--hidden1", type=int, default=export.DEFAULT_HIDDEN1)
    model_p.add_argument("--hidden2", type=int, default=export.DEFAULT_HIDDEN2)
    model_p.set_defaults(func=cmd_export_model)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except ExtractorError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
