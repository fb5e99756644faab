"""Benchmark harness: sweeps perturbations and attacks over synthetic video
sets and writes a deterministic CSV report plus a JSON manifest.

Given one config (and therefore one set of seeds), two runs produce
byte-identical outputs.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from ._version import __version__
from .aggregate import (
    ALL_STRATEGY_TOKENS,
    AggregationStrategy,
    StrategyKind,
    VideoDetector,
)
from .attacks.blackbox import (
    AttackTrace,
    LabelOracle,
    ScoreOracle,
    SquareAttackConfig,
    forgery_init_unrelated,
    removal_init_gaussian,
    square_attack,
    triangle_attack,
)
from .attacks.whitebox import WhiteboxConfig, pgd_bounded, subset_arbitrary
from .codec import CodecKey, SpreadSpectrumCodec, Watermark
from .errors import FramemarkError
from .metrics import psnr, ssim, welch_t_test
from .perturb import Perturbation, apply as apply_perturbation
from .threshold import fpr_of_tau, select_k, select_tau
from .video import Video, atomic_write_bytes, synth_video


@dataclass(frozen=True)
class VideoSetSpec:
    count: int = 20
    frames: int = 14
    height: int = 64
    width: int = 64
    channels: int = 3
    motion_mix: tuple[str, ...] = ("slow", "fast")


@dataclass(frozen=True)
class CodecSpec:
    key_seed: int = 1
    n: int = 32
    alpha: float = 0.02
    beta: float = 50.0
    activation: str = "sigmoid"


@dataclass(frozen=True)
class PerturbationSweep:
    kind: str
    parameters: tuple[float, ...]


@dataclass(frozen=True)
class AttackSpec:
    kind: str  # pgd | subset | square | triangle
    mode: str = "removal"
    epsilon: float = 0.05
    steps: int = 200
    queries: int = 1000
    masked_frames: int = 3
    strategy: Optional[str] = None


@dataclass(frozen=True)
class BenchConfig:
    seed: int = 0
    videos: VideoSetSpec = VideoSetSpec()
    codec: CodecSpec = CodecSpec()
    per_video_keys: bool = False
    strategies: tuple[str, ...] = ALL_STRATEGY_TOKENS
    tau: Optional[str] = None  # e.g. "27/32"; None selects from eta
    eta: float = 1e-4
    perturbations: tuple[PerturbationSweep, ...] = ()
    attacks: tuple[AttackSpec, ...] = ()
    mpeg4_encoder: Optional[str] = None

    @classmethod
    def from_dict(cls, data: dict) -> "BenchConfig":
        data = dict(data)
        if "videos" in data:
            data["videos"] = VideoSetSpec(**{**data["videos"],
                                             "motion_mix": tuple(data["videos"].get("motion_mix", ("slow", "fast")))})
        if "codec" in data:
            data["codec"] = CodecSpec(**data["codec"])
        if "strategies" in data:
            data["strategies"] = tuple(data["strategies"])
        if "perturbations" in data:
            data["perturbations"] = tuple(
                PerturbationSweep(kind=p["kind"], parameters=tuple(p["parameters"]))
                for p in data["perturbations"]
            )
        if "attacks" in data:
            data["attacks"] = tuple(AttackSpec(**a) for a in data["attacks"])
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class BenchCell:
    strategy: str
    perturbation: str
    parameter: float
    fnr: float
    fpr: float
    psnr_mean: float
    ssim_mean: float
    n_videos: int


@dataclass
class BenchReport:
    cells: list[BenchCell] = field(default_factory=list)
    attack_summaries: list[dict] = field(default_factory=list)
    ttest_results: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    traces: dict[str, AttackTrace] = field(default_factory=dict)

    CSV_HEADER = "strategy,perturbation,parameter,fnr,fpr,psnr_mean,ssim_mean,n_videos"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for c in self.cells:
            lines.append(
                f"{c.strategy},{c.perturbation},{c.parameter!r},{c.fnr!r},{c.fpr!r},"
                f"{c.psnr_mean!r},{c.ssim_mean!r},{c.n_videos}"
            )
        return "\n".join(lines) + "\n"

    def write(self, outdir: str) -> None:
        os.makedirs(outdir, exist_ok=True)
        atomic_write_bytes(os.path.join(outdir, "report.csv"), self.to_csv().encode())
        manifest = dict(self.manifest)
        manifest["attacks"] = self.attack_summaries
        manifest["ttests"] = self.ttest_results
        manifest["errors"] = self.errors
        payload = json.dumps(manifest, sort_keys=True, indent=2).encode()
        atomic_write_bytes(os.path.join(outdir, "manifest.json"), payload)
        if self.traces:
            trace_dir = os.path.join(outdir, "traces")
            os.makedirs(trace_dir, exist_ok=True)
            for name, trace in self.traces.items():
                atomic_write_bytes(
                    os.path.join(trace_dir, f"{name}.csv"), trace_csv(trace).encode()
                )


def trace_csv(trace: AttackTrace) -> str:
    lines = ["query_index,value"]
    lines.extend(f"{q},{v!r}" for q, v in trace.history)
    return "\n".join(lines) + "\n"


def eval_fnr(watermarked_videos, detector, perturbation: Optional[Perturbation]) -> float:
    """Fraction of (perturbed) watermarked videos the detector misses."""
    misses = 0
    for i, video in enumerate(watermarked_videos):
        if perturbation is not None:
            video = apply_perturbation(_reseeded(perturbation, i), video)
        if not detector.detect(video).watermarked:
            misses += 1
    return misses / len(watermarked_videos)


def eval_fpr(unwatermarked_videos, detector, perturbation: Optional[Perturbation]) -> float:
    """Fraction of (perturbed) unwatermarked videos the detector flags."""
    hits = 0
    for i, video in enumerate(unwatermarked_videos):
        if perturbation is not None:
            video = apply_perturbation(_reseeded(perturbation, i), video)
        if detector.detect(video).watermarked:
            hits += 1
    return hits / len(unwatermarked_videos)


def _reseeded(perturbation: Perturbation, index: int) -> Perturbation:
    return dataclasses.replace(perturbation, seed=perturbation.seed + index)


def _subseeds(seed: int, count: int) -> list[int]:
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(s & 0x7FFFFFFFFFFFFFFF) for s in state]


def config_hash(cfg: BenchConfig) -> str:
    blob = json.dumps(cfg.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _build_strategies(cfg: BenchConfig) -> dict[str, AggregationStrategy]:
    n = cfg.codec.n
    tau = Fraction(cfg.tau) if cfg.tau is not None else select_tau(n, cfg.eta)
    out = {}
    for token in cfg.strategies:
        kind = StrategyKind.from_token(token)
        if kind is StrategyKind.DETECTION_THRESHOLD:
            k = select_k(cfg.videos.frames, fpr_of_tau(n, tau), cfg.eta)
            k = max(k, 1)
            out[token] = AggregationStrategy(kind, tau, k=k)
        else:
            out[token] = AggregationStrategy(kind, tau)
    return out


def _video_sets(cfg: BenchConfig) -> tuple[list[Video], list[Video]]:
    v = cfg.videos
    seeds = _subseeds(cfg.seed, 2 * v.count + 1)
    motions = [v.motion_mix[i % len(v.motion_mix)] for i in range(v.count)]
    clean = [
        synth_video(v.frames, v.height, v.width, v.channels, motions[i], seeds[i])
        for i in range(v.count)
    ]
    unmarked = [
        synth_video(v.frames, v.height, v.width, v.channels, motions[i], seeds[v.count + i])
        for i in range(v.count)
    ]
    return clean, unmarked


def _mean_metric(values: list[float]) -> float:
    return float(np.mean(values)) if values else math.nan


def run_benchmark(cfg: BenchConfig) -> BenchReport:
    """Run the configured sweep and return the in-memory report.

    A failure inside one cell is recorded in ``report.errors`` and the run
    continues with the remaining cells.
    """
    report = BenchReport()
    report.manifest = {
        "tool": "framemark",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_sha256": config_hash(cfg),
        "seed": cfg.seed,
    }

    codec_key = CodecKey(
        seed=cfg.codec.key_seed,
        n=cfg.codec.n,
        height=cfg.videos.height,
        width=cfg.videos.width,
        channels=cfg.videos.channels,
        alpha=cfg.codec.alpha,
        beta=cfg.codec.beta,
        activation=cfg.codec.activation,
    )
    wm_seed = _subseeds(cfg.seed + 1, 1)[0]
    watermark = Watermark.random(cfg.codec.n, seed=wm_seed)
    strategies = _build_strategies(cfg)

    clean, unmarked = _video_sets(cfg)
    if cfg.per_video_keys:
        key_seeds = _subseeds(cfg.seed + 2, len(clean))
        keys = [dataclasses.replace(codec_key, seed=s) for s in key_seeds]
    else:
        keys = [codec_key] * len(clean)
    codecs = [SpreadSpectrumCodec(k) for k in keys]
    marked = [codecs[i].embed(clean[i], watermark) for i in range(len(clean))]

    def detectors(token: str) -> list[VideoDetector]:
        return [VideoDetector(c, watermark, strategies[token]) for c in codecs]

    def rate(videos, dets, perturbation, positive: bool) -> float:
        wrong = 0
        for i, video in enumerate(videos):
            if perturbation is not None:
                video = apply_perturbation(_reseeded(perturbation, i), video)
            verdict = dets[i].detect(video).watermarked
            wrong += (not verdict) if positive else verdict
        return wrong / len(videos)

    def add_cell(token, name, param, fnr, fpr, psnrs, ssims):
        report.cells.append(
            BenchCell(token, name, float(param), fnr, fpr,
                      _mean_metric(psnrs), _mean_metric(ssims), len(marked))
        )

    # Clean baseline: detector input equals the watermarked video itself.
    for token in cfg.strategies:
        dets = detectors(token)
        fnr = rate(marked, dets, None, positive=True)
        fpr = rate(unmarked, dets, None, positive=False)
        add_cell(token, "none", 0.0, fnr, fpr, [math.inf], [1.0])

    # Perturbation sweep; quality is measured against the watermarked video.
    pert_seed = _subseeds(cfg.seed + 3, 1)[0]
    for sweep in cfg.perturbations:
        for param in sweep.parameters:
            try:
                pert = Perturbation(sweep.kind, param, seed=pert_seed,
                                    encoder_command=cfg.mpeg4_encoder)
                perturbed = [
                    apply_perturbation(_reseeded(pert, i), v) for i, v in enumerate(marked)
                ]
                psnrs, ssims = [], []
                for orig, mod in zip(marked, perturbed):
                    if mod.shape == orig.shape:
                        psnrs.append(psnr(orig, mod))
                        ssims.append(ssim(orig, mod))
                for token in cfg.strategies:
                    dets = detectors(token)
                    fnr = sum(
                        0 if dets[i].detect(v).watermarked else 1
                        for i, v in enumerate(perturbed)
                    ) / len(perturbed)
                    fpr = rate(unmarked, dets, pert, positive=False)
                    add_cell(token, sweep.kind, param, fnr, fpr, psnrs, ssims)
                report.ttest_results.extend(
                    _motion_gap_ttest(cfg, sweep.kind, param, perturbed, codecs, watermark,
                                      strategies)
                )
            except (FramemarkError, ValueError, OSError) as exc:
                report.errors.append(
                    {"cell": f"{sweep.kind}:{param}", "error": f"{type(exc).__name__}: {exc}"}
                )

    # Attacks.
    attack_seeds = _subseeds(cfg.seed + 4, max(len(cfg.attacks), 1) * len(marked))
    for a_idx, spec in enumerate(cfg.attacks):
        try:
            _run_attack(cfg, spec, a_idx, report, marked, unmarked, codecs,
                        watermark, strategies, attack_seeds)
        except (FramemarkError, ValueError, OSError) as exc:
            report.errors.append(
                {"cell": f"attack:{spec.kind}:{spec.mode}", "error": f"{type(exc).__name__}: {exc}"}
            )
    return report


def _motion_gap_ttest(cfg, kind, param, perturbed, codecs, watermark, strategies):
    """Welch test of the detection statistic between the motion classes."""
    if len(set(cfg.videos.motion_mix)) < 2 or not cfg.strategies:
        return []
    token = cfg.strategies[0]
    motions = [cfg.videos.motion_mix[i % len(cfg.videos.motion_mix)]
               for i in range(len(perturbed))]
    groups: dict[str, list[float]] = {}
    for i, video in enumerate(perturbed):
        det = VideoDetector(codecs[i], watermark, strategies[token])
        groups.setdefault(motions[i], []).append(det.detect(video).statistic)
    labels = sorted(groups)
    xs, ys = groups[labels[0]], groups[labels[1]]
    if len(xs) < 2 or len(ys) < 2 or (np.var(xs) == 0 and np.var(ys) == 0):
        return []
    return [{
        "perturbation": kind,
        "parameter": param,
        "strategy": token,
        "groups": labels[:2],
        "p_value": welch_t_test(xs, ys),
    }]


def _run_attack(cfg, spec, a_idx, report, marked, unmarked, codecs, watermark,
                strategies, attack_seeds):
    name = f"{spec.kind}-{spec.mode}"
    token = spec.strategy or cfg.strategies[0]
    strategy = strategies[token]
    removal = spec.mode == "removal"
    sources = marked if removal else unmarked

    outcomes = []
    finals = []
    for i, video in enumerate(sources):
        seed = attack_seeds[a_idx * len(sources) + i]
        key = codecs[i].key
        if spec.kind == "pgd":
            wcfg = WhiteboxConfig(mode=spec.mode, epsilon=spec.epsilon, steps=spec.steps)
            attacked, _ = pgd_bounded(video, key, watermark, wcfg)
        elif spec.kind == "subset":
            mask = tuple(1 if j < spec.masked_frames else 0 for j in range(video.frame_count))
            wcfg = WhiteboxConfig(mode=spec.mode, steps=spec.steps, step_size=0.05,
                                  frame_mask=mask)
            attacked = subset_arbitrary(video, key, watermark, wcfg)
        elif spec.kind == "square":
            oracle = ScoreOracle(VideoDetector(codecs[i], watermark, strategy))
            trace = square_attack(video, oracle, spec.mode, spec.epsilon,
                                  spec.queries, seed=seed)
            attacked = trace.best_video
            report.traces[f"{name}-{token}-{i:03d}"] = trace
            finals.append(trace.final_value)
        elif spec.kind == "triangle":
            oracle = LabelOracle(VideoDetector(codecs[i], watermark, strategy))
            if removal:
                init = removal_init_gaussian(video, oracle, seed=seed)
                trace = triangle_attack(video, oracle, init, "unwatermarked",
                                        spec.queries, seed=seed)
            else:
                init = forgery_init_unrelated(video.shape, key, watermark, seed=seed)
                trace = triangle_attack(video, oracle, init, "watermarked",
                                        spec.queries, seed=seed)
            attacked = trace.best_video
            report.traces[f"{name}-{token}-{i:03d}"] = trace
            finals.append(trace.final_value)
        else:
            raise ValueError(f"unknown attack kind {spec.kind!r}")
        outcomes.append((video, attacked))

    for tok in cfg.strategies if spec.kind in ("pgd", "subset") else [token]:
        dets = [VideoDetector(c, watermark, strategies[tok]) for c in codecs]
        flagged = [dets[i].detect(attacked).watermarked
                   for i, (_, attacked) in enumerate(outcomes)]
        fnr = (sum(1 for v in flagged if not v) / len(flagged)) if removal else 0.0
        fpr = (sum(1 for v in flagged if v) / len(flagged)) if not removal else 0.0
        psnrs = [psnr(orig, att) for orig, att in outcomes]
        ssims = [ssim(orig, att) for orig, att in outcomes]
        param = spec.epsilon if spec.kind in ("pgd", "square") else float(
            spec.masked_frames if spec.kind == "subset" else spec.queries)
        report.cells.append(
            BenchCell(tok, f"attack:{name}", float(param), fnr, fpr,
                      _mean_metric(psnrs), _mean_metric(ssims), len(outcomes))
        )

    summary = {
        "attack": name,
        "strategy": token,
        "n_videos": len(sources),
    }
    if finals:
        summary["mean_final_value"] = float(np.mean(finals))
    report.attack_summaries.append(summary)
