"""Command-line surface: weight-map dumps, scoring, evaluation, timing.

Machine-readable results go to stdout; diagnostics go to stderr. Exit codes:
0 on success, 2 for malformed or inconsistent inputs, 3 for I/O problems.
"""

from __future__ import annotations

import argparse
import json
import math
import mmap
import sys
import time
from pathlib import Path

from . import freqprior, ingest, metrics, predictor, tensorio
from .errors import EngineError, InputNotFoundError, UnmatchedIdsError

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_IO = 3


def _check_plan_args(frames: int, window: int) -> None:
    if frames < 1:
        raise EngineError(f"--frames must be >= 1, got {frames}")
    if window < 2:
        raise EngineError(f"--window must be >= 2, got {window}")


def _load_sequence(path: str) -> ingest.FrameSequence:
    if path.endswith(".y4m"):
        if not Path(path).is_file():
            raise InputNotFoundError(f"input not found: {path}")
        with open(path, "rb") as handle:
            # map instead of read: only the pages actually analyzed get paged in
            buffer = mmap.mmap(handle.fileno(), 0, access=mmap.ACCESS_READ)
        return ingest.parse_y4m(buffer)
    return ingest.load_image_sequence(path)


def _print_json(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")


def _print_csv_row(payload: dict) -> None:
    sys.stdout.write(",".join(payload) + "\n")
    sys.stdout.write(",".join(_csv_cell(v) for v in payload.values()) + "\n")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def cmd_weight_maps(args: argparse.Namespace) -> int:
    _check_plan_args(args.frames, args.window)
    sequence = _load_sequence(args.input)
    plan = ingest.build_sampling_plan(sequence.frame_count, args.frames, args.window)
    maps = predictor.compute_weight_maps(sequence, plan, threads=args.threads)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    for position, pair in enumerate(maps):
        for kind, grid in (("wart", pair.w_art), ("wstr", pair.w_str)):
            pgm = out_dir / f"{kind}_{position:03d}.pgm"
            pgm.write_bytes(freqprior.weight_map_pgm_bytes(grid))
            csv_path = out_dir / f"{kind}_{position:03d}.csv"
            csv_path.write_text(freqprior.weight_map_csv_text(grid), encoding="utf-8")
            written += [pgm.name, csv_path.name]
    _print_json({"out_dir": str(out_dir), "frames": plan.frames, "files": written})
    return EXIT_OK


def cmd_score(args: argparse.Namespace) -> int:
    _check_plan_args(args.frames, args.window)
    started = time.perf_counter()
    sequence = _load_sequence(args.input)
    features = tensorio.load_tensor(args.features)
    model = predictor.load_model(args.model)
    plan = ingest.build_sampling_plan(sequence.frame_count, args.frames, args.window)
    result = predictor.predict_video(sequence, features, model, plan,
                                     threads=args.threads)
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    payload = {
        "score": result.score,
        "q_art": result.q_art,
        "q_str": result.q_str,
        "q_raw": result.q_raw,
        "alpha": result.alpha,
        "beta": result.beta,
        "gamma": result.gamma,
    }
    if not args.no_timing:
        payload["timing_ms"] = elapsed_ms
    if args.format == "csv":
        _print_csv_row(payload)
    else:
        _print_json(payload)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    preds = metrics.read_score_csv(args.predictions)
    gts = metrics.read_score_csv(args.ground_truth)
    pred_values, gt_values = metrics.join_scores(preds, gts)
    payload = {
        "srcc": metrics.srcc(pred_values, gt_values),
        "plcc": metrics.plcc(pred_values, gt_values),
        "n": int(pred_values.size),
    }
    if args.format == "csv":
        _print_csv_row(payload)
    else:
        _print_json(payload)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    _check_plan_args(args.frames, args.window)
    inputs = args.input or []
    feature_paths = args.features or []
    if not inputs:
        raise EngineError("bench needs at least one --input/--features pair")
    if len(inputs) != len(feature_paths):
        raise EngineError(f"{len(inputs)} inputs but {len(feature_paths)} feature files")
    if args.runs < 1:
        raise EngineError(f"--runs must be >= 1, got {args.runs}")
    for path in list(inputs) + list(feature_paths) + [args.model]:
        if not Path(path).is_file():
            raise InputNotFoundError(f"input not found: {path}")
    model = predictor.load_model(args.model)

    sys.stdout.write("input,width,height,runs,mean_ms,stddev_ms\n")
    for clip_path, feat_path in zip(inputs, feature_paths):
        timings = []
        width = height = 0
        for _ in range(args.runs):
            started = time.perf_counter()
            sequence = _load_sequence(clip_path)
            features = tensorio.load_tensor(feat_path)
            plan = ingest.build_sampling_plan(sequence.frame_count,
                                              args.frames, args.window)
            predictor.predict_video(sequence, features, model, plan,
                                    threads=args.threads)
            timings.append((time.perf_counter() - started) * 1000.0)
            width, height = sequence.width, sequence.height
        mean = sum(timings) / len(timings)
        var = sum((t - mean) ** 2 for t in timings) / len(timings)
        sys.stdout.write(f"{clip_path},{width},{height},{args.runs},"
                         f"{mean:.3f},{math.sqrt(var):.3f}\n")
    return EXIT_OK


def cmd_inspect_model(args: argparse.Namespace) -> int:
    entries = tensorio.load_bundle(args.model)
    payload = {"entries": [{"name": name, "shape": list(array.shape)}
                           for name, array in entries.items()]}
    _print_json(payload)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fgvq",
                                     description="Frequency-guided short-form "
                                                 "video quality engine")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True,
                       help=".y4m file or image-sequence glob pattern")
        p.add_argument("--frames", type=int, default=16, metavar="T",
                       help="number of sampled frames (default 16)")
        p.add_argument("--window", type=int, default=6, metavar="L",
                       help="temporal window length (default 6)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: all cores; results are "
                            "identical for any value)")

    maps_p = sub.add_parser("weight-maps", help="dump per-frame weight maps")
    add_common(maps_p)
    maps_p.add_argument("--out-dir", required=True, help="directory for PGM/CSV dumps")
    maps_p.set_defaults(func=cmd_weight_maps)

    score_p = sub.add_parser("score", help="score one clip from precomputed features")
    add_common(score_p)
    score_p.add_argument("--features", required=True, help=".fgt tensor [T, C, 14, 14]")
    score_p.add_argument("--model", required=True, help=".fgb model bundle")
    score_p.add_argument("--format", choices=("json", "csv"), default="json")
    score_p.add_argument("--no-timing", action="store_true",
                         help="omit timing_ms (for byte-stable golden output)")
    score_p.set_defaults(func=cmd_score)

    eval_p = sub.add_parser("eval", help="SRCC/PLCC between two id,score CSV files")
    eval_p.add_argument("predictions", help="CSV of predicted scores")
    eval_p.add_argument("ground_truth", help="CSV of subjective scores")
    eval_p.add_argument("--format", choices=("json", "csv"), default="json")
    eval_p.set_defaults(func=cmd_eval)

    bench_p = sub.add_parser("bench", help="decode-to-score timing per input")
    bench_p.add_argument("--input", action="append",
                         help="clip to time (repeat per resolution)")
    bench_p.add_argument("--features", action="append",
                         help=".fgt features matching each --input")
    bench_p.add_argument("--model", required=True, help=".fgb model bundle")
    bench_p.add_argument("--frames", type=int, default=16, metavar="T")
    bench_p.add_argument("--window", type=int, default=6, metavar="L")
    bench_p.add_argument("--threads", type=int, default=None)
    bench_p.add_argument("--runs", type=int, default=10, help="runs per input (default 10)")
    bench_p.set_defaults(func=cmd_bench)

    inspect_p = sub.add_parser("inspect-model", help="list bundle entry names and shapes")
    inspect_p.add_argument("--model", required=True, help=".fgb model bundle")
    inspect_p.set_defaults(func=cmd_inspect_model)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnmatchedIdsError as exc:
        shown = ", ".join(exc.ids[:10])
        sys.stderr.write(f"error: {exc} (first offenders: {shown})\n")
        return EXIT_INVALID
    except InputNotFoundError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except EngineError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
