"""Command-line front end: generate, embed, detect, perturb, attack,
threshold selection, benchmark runs, and CSV-to-SVG plotting."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from ._version import __version__
from .aggregate import ALL_STRATEGY_TOKENS, AggregationStrategy, StrategyKind, VideoDetector
from .attacks.blackbox import (
    LabelOracle,
    ScoreOracle,
    forgery_init_unrelated,
    removal_init_gaussian,
    square_attack,
    triangle_attack,
)
from .attacks.whitebox import WhiteboxConfig, pgd_bounded, subset_arbitrary
from .bench import BenchConfig, run_benchmark, trace_csv
from .codec import CodecKey, SpreadSpectrumCodec, Watermark, decode_video
from .errors import FramemarkError
from .metrics import psnr
from .perturb import IMAGE_KINDS, VIDEO_KINDS, Perturbation, apply as apply_perturbation
from .plot import write_chart
from .threshold import fpr_of_tau, select_k, select_tau
from .video import atomic_write_bytes, load_video, synth_video, write_container


def _emit(data: dict) -> None:
    print(json.dumps(data, sort_keys=True))


def _parse_fraction(text: str) -> Fraction:
    return Fraction(text)


def _parse_mask(text: str, frame_count: int) -> tuple[int, ...]:
    chosen = set()
    for part in text.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            chosen.update(range(int(lo), int(hi) + 1))
        elif part:
            chosen.add(int(part))
    bad = [i for i in chosen if not 0 <= i < frame_count]
    if bad:
        raise ValueError(f"frame mask indices {bad} out of range 0..{frame_count - 1}")
    return tuple(1 if i in chosen else 0 for i in range(frame_count))


def _add_codec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--key-seed", type=int, default=1, help="codec key seed")
    parser.add_argument("--n", type=int, default=32, help="watermark length in bits")
    parser.add_argument("--alpha", type=float, default=0.02, help="embedding strength")
    parser.add_argument("--beta", type=float, default=50.0, help="decoder gain")
    parser.add_argument("--activation", choices=("sigmoid", "linear"), default="sigmoid")
    parser.add_argument("--bits", help="watermark bits as hex (default: derived from --seed)")


def _codec_for(video, args) -> tuple[CodecKey, Watermark]:
    key = CodecKey(
        seed=args.key_seed,
        n=args.n,
        height=video.height,
        width=video.width,
        channels=video.channels,
        alpha=args.alpha,
        beta=args.beta,
        activation=args.activation,
    )
    if args.bits:
        wm = Watermark.from_hex(args.bits, args.n)
    else:
        wm = Watermark.random(args.n, seed=args.seed)
    return key, wm


def _strategy_for(args, key: CodecKey, frame_count: int) -> AggregationStrategy:
    tau = _parse_fraction(args.tau) if args.tau else select_tau(key.n, args.eta)
    kind = StrategyKind.from_token(args.strategy)
    if kind is StrategyKind.DETECTION_THRESHOLD:
        k = args.k if args.k is not None else select_k(frame_count, fpr_of_tau(key.n, tau), args.eta)
        return AggregationStrategy(kind, tau, k=max(k, 1))
    return AggregationStrategy(kind, tau)


def _cmd_gen(args) -> int:
    video = synth_video(args.frames, args.height, args.width, args.channels,
                        args.motion, args.seed)
    write_container(video, args.output)
    _emit({"written": args.output, "shape": list(video.shape)})
    return 0


def _cmd_embed(args) -> int:
    video = load_video(args.input)
    key, wm = _codec_for(video, args)
    marked = SpreadSpectrumCodec(key).embed(video, wm)
    write_container(marked, args.output)
    _emit({
        "written": args.output,
        "bits": wm.to_hex(),
        "psnr_vs_input": psnr(video, marked),
    })
    return 0


def _cmd_detect(args) -> int:
    video = load_video(args.input)
    key, wm = _codec_for(video, args)
    strategy = _strategy_for(args, key, video.frame_count)
    result = VideoDetector(SpreadSpectrumCodec(key), wm, strategy).detect(video)
    payload = {
        "verdict": result.verdict,
        "statistic": result.statistic,
        "strategy": strategy.kind.value,
        "tau": f"{strategy.tau.numerator}/{strategy.tau.denominator}",
    }
    if strategy.k is not None:
        payload["k"] = strategy.k
    _emit(payload)
    return 0


def _cmd_perturb(args) -> int:
    video = load_video(args.input)
    kind, _, param = args.perturb.partition(":")
    if not param:
        raise ValueError(f"--perturb expects kind:parameter, got {args.perturb!r}")
    pert = Perturbation(kind, float(param), seed=args.seed,
                        encoder_command=args.mpeg4_encoder)
    result = apply_perturbation(pert, video)
    write_container(result, args.output)
    _emit({"written": args.output, "kind": kind, "parameter": float(param),
           "shape": list(result.shape)})
    return 0


def _cmd_attack(args) -> int:
    video = load_video(args.input)
    key, wm = _codec_for(video, args)
    strategy = _strategy_for(args, key, video.frame_count)
    codec = SpreadSpectrumCodec(key)
    detector = VideoDetector(codec, wm, strategy)
    summary: dict = {"attack": args.attack, "mode": args.mode,
                     "strategy": strategy.kind.value}
    trace = None

    if args.attack == "pgd":
        cfg = WhiteboxConfig(mode=args.mode, epsilon=args.eps, steps=args.steps,
                             step_size=args.step_size)
        attacked, accuracies = pgd_bounded(video, key, wm, cfg)
        summary["mean_frame_ba"] = float(np.mean(accuracies))
    elif args.attack == "subset":
        if not args.frame_mask:
            raise ValueError("subset attack requires --frame-mask (e.g. '0-2,7')")
        mask = _parse_mask(args.frame_mask, video.frame_count)
        cfg = WhiteboxConfig(mode=args.mode, steps=args.steps,
                             step_size=args.step_size, frame_mask=mask)
        attacked = subset_arbitrary(video, key, wm, cfg)
        summary["masked_frames"] = int(sum(mask))
    elif args.attack == "square":
        oracle = ScoreOracle(detector)
        trace = square_attack(video, oracle, args.mode, args.eps, args.queries,
                              seed=args.seed)
        attacked = trace.best_video
    elif args.attack == "triangle":
        oracle = LabelOracle(detector)
        if args.mode == "removal":
            init = removal_init_gaussian(video, oracle, seed=args.seed)
            trace = triangle_attack(video, oracle, init, "unwatermarked",
                                    args.queries, seed=args.seed)
        else:
            init = forgery_init_unrelated(video.shape, key, wm, seed=args.seed)
            trace = triangle_attack(video, oracle, init, "watermarked",
                                    args.queries, seed=args.seed)
        attacked = trace.best_video
    else:
        raise ValueError(f"unknown attack {args.attack!r}")

    write_container(attacked, args.output)
    result = detector.detect(attacked)
    deviation = float(np.max(np.abs(
        attacked.frames.astype(np.float64) - video.frames.astype(np.float64))))
    summary.update({
        "written": args.output,
        "verdict": result.verdict,
        "statistic": result.statistic,
        "linf": deviation,
    })
    if trace is not None:
        summary["queries"] = trace.queries_used
        summary["final_value"] = trace.final_value
        if args.trace:
            atomic_write_bytes(args.trace, trace_csv(trace).encode())
            summary["trace"] = args.trace
    _emit(summary)
    return 0


def _cmd_threshold(args) -> int:
    tau = select_tau(args.n, args.eta)
    m = int(tau * args.n)
    achieved = fpr_of_tau(args.n, tau)
    payload = {
        "n": args.n,
        "eta": args.eta,
        "tau": f"{m}/{args.n}",
        "m": m,
        "fpr": achieved,
    }
    if args.frames:
        payload["frames"] = args.frames
        payload["k"] = select_k(args.frames, achieved, args.eta)
    _emit(payload)
    return 0


def _cmd_bench(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = BenchConfig.from_dict(data)
    report = run_benchmark(cfg)
    report.write(args.out)
    _emit({
        "out": args.out,
        "cells": len(report.cells),
        "errors": len(report.errors),
        "config_sha256": report.manifest["config_sha256"],
    })
    return 0


def _cmd_plot(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        text = fh.read()
    write_chart(text, args.output, x_field=args.x, y_field=args.y,
                strategy=args.strategy, perturbation=args.perturbation)
    _emit({"written": args.output})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framemark",
        description="Frame-level video watermark robustness toolkit",
    )
    parser.add_argument("--version", action="version", version=f"framemark {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic video")
    p.add_argument("--output", required=True, help="output .vmb path")
    p.add_argument("--frames", type=int, default=14)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--channels", type=int, default=3)
    p.add_argument("--motion", choices=("slow", "fast"), default="slow")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("embed", help="embed a watermark")
    p.add_argument("--input", required=True, help=".vmb file or PNG directory")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_codec_flags(p)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("detect", help="detect a watermark")
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", choices=ALL_STRATEGY_TOKENS, default="ba-mean")
    p.add_argument("--tau", help='threshold as a fraction, e.g. "27/32"')
    p.add_argument("--eta", type=float, default=1e-4)
    p.add_argument("--k", type=int, help="frame count threshold (detection-threshold)")
    p.add_argument("--seed", type=int, default=0)
    _add_codec_flags(p)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("perturb", help="apply a common perturbation")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--perturb", required=True, metavar="KIND:PARAM",
                   help=f"one of {IMAGE_KINDS + VIDEO_KINDS}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mpeg4-encoder", help="encoder command template with {input} {output} {Q}")
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("attack", help="run an adversarial attack")
    p.add_argument("--attack", choices=("pgd", "subset", "square", "triangle"), required=True)
    p.add_argument("--mode", choices=("removal", "forgery"), default="removal")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--step-size", type=float)
    p.add_argument("--queries", type=int, default=1000)
    p.add_argument("--frame-mask", help="attackable frames, e.g. '0-2,7'")
    p.add_argument("--strategy", choices=ALL_STRATEGY_TOKENS, default="ba-mean")
    p.add_argument("--tau", help='threshold as a fraction, e.g. "27/32"')
    p.add_argument("--eta", type=float, default=1e-4)
    p.add_argument("--k", type=int)
    p.add_argument("--trace", help="write the attack trace CSV here")
    p.add_argument("--seed", type=int, default=0)
    _add_codec_flags(p)
    p.set_defaults(func=_cmd_attack)

    p = sub.add_parser("threshold", help="select tau (and k) for a target FPR")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eta", type=float, default=1e-4)
    p.add_argument("--frames", type=int, help="also select the frame threshold k")
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("plot", help="draw an SVG line chart from a report CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--x", default="parameter")
    p.add_argument("--y", default="fnr")
    p.add_argument("--strategy")
    p.add_argument("--perturbation")
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FramemarkError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
