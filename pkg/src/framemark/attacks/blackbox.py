"""Query-based attacks against a detection API.

Square attack: random search over +/-eps square patches guided by a
scalar score.  Triangle attack: label-only search that shrinks the
distance to a target video by stepping inside the 2-D plane spanned by
the direction to the target and a random orthogonal direction, adapting
the step angle from acceptance feedback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..aggregate import AggregationStrategy, StrategyKind, VideoDetector
from ..codec import CodecKey, Watermark, embed
from ..errors import DimensionError, InitializationError, OracleError
from ..video import Video, _unchecked_video
from .whitebox import MODES, linf_bounds_f32

_DETECTION_KINDS = (StrategyKind.DETECTION_MEDIAN, StrategyKind.DETECTION_THRESHOLD)


class ScoreOracle:
    """Video -> scalar score, counting queries.

    For logit-, bit-, and BA-level strategies the score is the aggregated
    bitwise accuracy; for detection-level strategies it is the number of
    frames detected as watermarked.
    """

    def __init__(self, detector: VideoDetector):
        self.detector = detector
        self.query_count = 0

    def __call__(self, video: Video) -> float:
        self.query_count += 1
        return self.detector.detect(video).statistic


class LabelOracle:
    """Video -> watermarked/unwatermarked label, counting queries."""

    def __init__(self, detector: VideoDetector):
        self.detector = detector
        self.query_count = 0

    def __call__(self, video: Video) -> bool:
        self.query_count += 1
        return self.detector.detect(video).watermarked


@dataclass(frozen=True)
class AttackTrace:
    """Outcome of one attack run.

    ``history`` has one (query_index, value) pair per oracle call; the value
    is the best score so far for the square attack and the accepted
    l-infinity distance so far for the triangle attack.
    """

    best_video: Video
    history: tuple[tuple[int, float], ...]
    queries_used: int

    @property
    def final_value(self) -> float:
        return self.history[-1][1] if self.history else math.nan


@dataclass(frozen=True)
class SquareAttackConfig:
    """Patch schedule knobs; defaults follow the recorded stand-in schedule."""

    side_scale: float = 0.1
    area_fraction: float = 0.8
    shrink_points: tuple[float, ...] = (0.10, 0.25, 0.50, 0.75)
    per_frame: bool = False


def _square_side(cfg: SquareAttackConfig, height: int, width: int,
                 query: int, budget: int) -> int:
    side = math.ceil(math.sqrt(cfg.area_fraction * height * width) * cfg.side_scale)
    side = max(1, min(side, height, width))
    progress = query / budget
    for point in cfg.shrink_points:
        if progress >= point:
            side = max(1, side // 2)
    return side


def square_attack(
    video: Video,
    oracle: ScoreOracle,
    mode: str,
    epsilon: float,
    max_queries: int,
    seed: int = 0,
    config: SquareAttackConfig = SquareAttackConfig(),
) -> AttackTrace:
    """Score-guided random search under an l-infinity budget.

    Each candidate overwrites one square region of the accumulated
    perturbation with fresh +/-epsilon values (one value per channel,
    shared by all frames unless ``config.per_frame``).  A candidate is
    kept only if it strictly improves the score in the mode's direction:
    removal decreases it, forgery increases it.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if max_queries < 1:
        raise ValueError(f"max_queries must be >= 1, got {max_queries}")

    rng = np.random.default_rng(seed)
    f, h, w, c = video.shape
    base = video.frames.astype(np.float64)
    lo32, hi32 = linf_bounds_f32(base, epsilon)
    delta = np.zeros((f, h, w, c) if config.per_frame else (h, w, c))
    better = (lambda a, b: a < b) if mode == "removal" else (lambda a, b: a > b)

    history: list[tuple[int, float]] = []

    def ask(candidate: Video) -> float:
        try:
            return float(oracle(candidate))
        except Exception as exc:
            trace = AttackTrace(best, tuple(history), len(history))
            raise OracleError(f"score oracle failed: {exc}", trace) from exc

    best = video
    best_score = ask(video)
    history.append((1, best_score))

    for query in range(2, max_queries + 1):
        side = _square_side(config, h, w, query, max_queries)
        top = int(rng.integers(0, h - side + 1))
        left = int(rng.integers(0, w - side + 1))
        if config.per_frame:
            values = rng.choice((-epsilon, epsilon), size=(f, 1, 1, c))
            trial = delta.copy()
            trial[:, top:top + side, left:left + side, :] = values
        else:
            values = rng.choice((-epsilon, epsilon), size=(c,))
            trial = delta.copy()
            trial[top:top + side, left:left + side, :] = values
        candidate32 = np.clip((base + trial).astype(np.float32), lo32, hi32)
        candidate = _unchecked_video(candidate32)
        score = ask(candidate)
        if better(score, best_score):
            best, best_score, delta = candidate, score, trial
        history.append((query, best_score))

    return AttackTrace(best, tuple(history), len(history))


@dataclass(frozen=True)
class TriangleAttackConfig:
    """Angle schedule for the 2-D subspace steps."""

    initial_angle: float = math.pi / 6
    angle_up: float = 1.1
    angle_down: float = 0.9
    min_angle: float = 0.01
    max_angle: float = 1.2


def _linf(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a.astype(np.float64) - b.astype(np.float64))))


def triangle_attack(
    target_video: Video,
    oracle: LabelOracle,
    init_video: Video,
    desired_label: str,
    max_queries: int,
    seed: int = 0,
    config: TriangleAttackConfig = TriangleAttackConfig(),
) -> AttackTrace:
    """Label-only perturbation shrinking toward a target video.

    Starting from ``init_video`` (which must already carry the desired
    label), each step proposes the projection of the current point onto a
    ray from the target rotated by the search angle inside the plane
    spanned by (current - target) and a random orthogonal direction.  A
    proposal is accepted only if it keeps the desired label and does not
    increase the l-infinity distance to the target; the angle grows on
    accept and shrinks on reject.
    """
    if desired_label not in ("watermarked", "unwatermarked"):
        raise ValueError(f"desired_label must be watermarked/unwatermarked, got {desired_label!r}")
    if max_queries < 1:
        raise ValueError(f"max_queries must be >= 1, got {max_queries}")
    if init_video.shape != target_video.shape:
        raise DimensionError(
            f"init shape {init_video.shape} != target shape {target_video.shape}"
        )
    want = desired_label == "watermarked"

    rng = np.random.default_rng(seed)
    target = target_video.frames.astype(np.float64).ravel()
    history: list[tuple[int, float]] = []
    best = init_video
    best_linf = _linf(init_video.frames, target_video.frames)

    def ask(candidate: Video) -> bool:
        try:
            return bool(oracle(candidate))
        except Exception as exc:
            trace = AttackTrace(best, tuple(history), len(history))
            raise OracleError(f"label oracle failed: {exc}", trace) from exc

    if ask(init_video) != want:
        raise InitializationError(f"initial video is not labeled {desired_label}")
    queries = 1
    history.append((queries, best_linf))

    current = init_video.frames.astype(np.float64).ravel()
    angle = config.initial_angle
    while queries < max_queries:
        residual = current - target
        dist = float(np.linalg.norm(residual))
        if dist == 0.0:
            break
        u = residual / dist
        r = rng.standard_normal(u.size)
        r -= (r @ u) * u
        norm = float(np.linalg.norm(r))
        if norm < 1e-12:
            continue
        r /= norm
        direction = math.cos(angle) * u + math.sin(angle) * r
        proposal = target + dist * math.cos(angle) * direction
        candidate = _unchecked_video(
            np.clip(proposal, 0.0, 1.0).reshape(target_video.shape).astype(np.float32)
        )
        cand_linf = _linf(candidate.frames, target_video.frames)
        label_ok = ask(candidate) == want
        queries += 1
        if label_ok and cand_linf <= best_linf:
            best, best_linf = candidate, cand_linf
            current = candidate.frames.astype(np.float64).ravel()
            angle = min(angle * config.angle_up, config.max_angle)
        else:
            angle = max(angle * config.angle_down, config.min_angle)
        history.append((queries, best_linf))

    return AttackTrace(best, tuple(history), len(history))


def removal_init_gaussian(
    video: Video,
    oracle: LabelOracle,
    seed: int = 0,
    sigma0: float = 0.02,
    growth: float = 1.5,
    sigma_cap: float = 2.0,
) -> Video:
    """Escalate gaussian noise until a watermarked video flips label.

    Returns the first noisy copy the oracle labels unwatermarked; raises
    if the video is not watermarked to begin with or if no flip occurs
    before the sigma cap.
    """
    if not oracle(video):
        raise InitializationError("input video is not labeled watermarked")
    rng = np.random.default_rng(seed)
    base = video.frames.astype(np.float64)
    sigma = sigma0
    while sigma <= sigma_cap:
        noisy = np.clip(base + rng.normal(0.0, sigma, size=base.shape), 0.0, 1.0)
        candidate = Video(noisy.astype(np.float32))
        if not oracle(candidate):
            return candidate
        sigma *= growth
    raise InitializationError(
        f"no label flip up to sigma={sigma_cap}; the codec resists gaussian noise"
    )


def forgery_init_unrelated(
    shape: tuple[int, int, int, int], key: CodecKey, wg: Watermark, seed: int = 0
) -> Video:
    """A random-noise video of the requested shape with the watermark embedded."""
    rng = np.random.default_rng(seed)
    noise = Video(rng.uniform(0.0, 1.0, size=shape).astype(np.float32))
    return embed(noise, key, wg)
