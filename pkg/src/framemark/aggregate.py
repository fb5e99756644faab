"""Frame-level aggregation: seven ways to turn per-frame logits into one verdict.

All threshold comparisons are carried out on exact fractions (bitwise
accuracy is matches/n), so a tau given as e.g. ``Fraction(27, 32)`` behaves
identically to the integer rule ``matches >= 27``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .codec import Codec, Watermark, round_logits
from .errors import DimensionError
from .video import Video


class StrategyKind(enum.Enum):
    LOGIT_MEAN = "logit-mean"
    LOGIT_MEDIAN = "logit-median"
    BIT_MEDIAN = "bit-median"
    BA_MEAN = "ba-mean"
    BA_MEDIAN = "ba-median"
    DETECTION_MEDIAN = "detection-median"
    DETECTION_THRESHOLD = "detection-threshold"

    @classmethod
    def from_token(cls, token: str) -> "StrategyKind":
        for kind in cls:
            if kind.value == token:
                return kind
        raise ValueError(f"unknown strategy {token!r}; expected one of "
                         f"{[k.value for k in cls]}")


ALL_STRATEGY_TOKENS = tuple(kind.value for kind in StrategyKind)


@dataclass(frozen=True)
class AggregationStrategy:
    """A strategy kind plus its thresholds.

    ``tau`` is the per-comparison bitwise-accuracy threshold and must lie in
    (1/2, 1].  ``k`` is the minimum detected-frame count and is only
    meaningful (and required) for the detection-threshold kind.
    """

    kind: StrategyKind
    tau: Fraction
    k: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "tau", Fraction(self.tau))
        if not Fraction(1, 2) < self.tau <= 1:
            raise ValueError(f"tau must be in (1/2, 1], got {self.tau}")
        if self.kind is StrategyKind.DETECTION_THRESHOLD:
            if self.k is None or self.k < 1:
                raise ValueError("detection-threshold requires k >= 1")
        elif self.k is not None:
            raise ValueError(f"k is only valid for detection-threshold, got kind {self.kind}")


@dataclass(frozen=True)
class DetectionResult:
    """Video-level verdict plus the scalar statistic the verdict tested."""

    watermarked: bool
    statistic: float
    strategy: AggregationStrategy
    per_frame_decisions: Optional[np.ndarray] = None

    @property
    def verdict(self) -> str:
        return "watermarked" if self.watermarked else "unwatermarked"


def _check_matrix(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 1:
        raise DimensionError(f"logit matrix must be (F, n) with F >= 1, got {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise ValueError("logit matrix contains non-finite entries")
    return logits


def logit_mean(logits: np.ndarray) -> np.ndarray:
    """Column-wise arithmetic mean of the logit matrix."""
    return _check_matrix(logits).mean(axis=0)


def geometric_median(vectors: np.ndarray, tol: float = 1e-9, max_iter: int = 1000) -> np.ndarray:
    """Weiszfeld iteration for the point minimizing summed euclidean distance.

    Stops when the objective decreases by less than ``tol``; denominators are
    regularized by 1e-12 so iterates may land on input points safely.
    """
    pts = _check_matrix(vectors)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if pts.shape[0] == 1:
        return pts[0].copy()

    def objective(z):
        return float(np.linalg.norm(pts - z, axis=1).sum())

    z = pts.mean(axis=0)
    best = objective(z)
    for _ in range(max_iter):
        dist = np.maximum(np.linalg.norm(pts - z, axis=1), 1e-12)
        weights = 1.0 / dist
        candidate = weights @ pts / weights.sum()
        value = objective(candidate)
        if value <= best:
            z, improved = candidate, best - value
            best = value
            if improved < tol:
                break
        else:
            break
    return z


def bit_median(logits: np.ndarray) -> np.ndarray:
    """Per-position majority vote over the rounded rows (ties count as 1)."""
    logits = _check_matrix(logits)
    bits = round_logits(logits)
    votes = bits.sum(axis=0, dtype=np.int64)
    return (2 * votes >= bits.shape[0]).astype(np.uint8)


def _match_counts(logits: np.ndarray, wg: Watermark) -> np.ndarray:
    logits = _check_matrix(logits)
    if logits.shape[1] != wg.n:
        raise DimensionError(f"logit rows have {logits.shape[1]} bits, watermark has {wg.n}")
    return (round_logits(logits) == wg.bits).sum(axis=1, dtype=np.int64)


def ba_mean(logits: np.ndarray, wg: Watermark) -> Fraction:
    """Mean per-frame bitwise accuracy, as an exact fraction."""
    counts = _match_counts(logits, wg)
    return Fraction(int(counts.sum()), counts.size * wg.n)


def ba_median(logits: np.ndarray, wg: Watermark) -> Fraction:
    """Median per-frame bitwise accuracy; even F averages the middle pair."""
    counts = np.sort(_match_counts(logits, wg))
    f = counts.size
    if f % 2 == 1:
        return Fraction(int(counts[f // 2]), wg.n)
    return Fraction(int(counts[f // 2 - 1]) + int(counts[f // 2]), 2 * wg.n)


def frame_decisions(logits: np.ndarray, wg: Watermark, tau) -> np.ndarray:
    """Per-frame detection bits: 1 where the frame's BA reaches tau."""
    tau = Fraction(tau)
    counts = _match_counts(logits, wg)
    return np.array([Fraction(int(c), wg.n) >= tau for c in counts], dtype=np.uint8)


def detect(logits: np.ndarray, wg: Watermark, strategy: AggregationStrategy) -> DetectionResult:
    """Apply one aggregation strategy to a logit matrix and produce a verdict."""
    logits = _check_matrix(logits)
    kind, tau = strategy.kind, strategy.tau

    if kind in (StrategyKind.LOGIT_MEAN, StrategyKind.LOGIT_MEDIAN, StrategyKind.BIT_MEDIAN):
        if kind is StrategyKind.LOGIT_MEAN:
            bits = round_logits(logit_mean(logits))
        elif kind is StrategyKind.LOGIT_MEDIAN:
            bits = round_logits(geometric_median(logits))
        else:
            bits = bit_median(logits)
        if bits.size != wg.n:
            raise DimensionError(f"aggregated bits have length {bits.size}, watermark {wg.n}")
        ba = Fraction(int(np.count_nonzero(bits == wg.bits)), wg.n)
        return DetectionResult(ba >= tau, float(ba), strategy)

    if kind is StrategyKind.BA_MEAN:
        ba = ba_mean(logits, wg)
        return DetectionResult(ba >= tau, float(ba), strategy)

    if kind is StrategyKind.BA_MEDIAN:
        ba = ba_median(logits, wg)
        return DetectionResult(ba >= tau, float(ba), strategy)

    decisions = frame_decisions(logits, wg, tau)
    detected = int(decisions.sum())
    if kind is StrategyKind.DETECTION_MEDIAN:
        verdict = 2 * detected >= decisions.size
    else:
        if strategy.k > decisions.size:
            raise ValueError(
                f"detection-threshold k={strategy.k} exceeds frame count {decisions.size}"
            )
        verdict = detected >= strategy.k
    return DetectionResult(verdict, float(detected), strategy, per_frame_decisions=decisions)


@dataclass(frozen=True)
class VideoDetector:
    """Binds a codec, ground-truth watermark, and strategy into video -> verdict."""

    codec: Codec
    watermark: Watermark
    strategy: AggregationStrategy

    def detect(self, video: Video) -> DetectionResult:
        return detect(self.codec.decode_video(video), self.watermark, self.strategy)

    def __call__(self, video: Video) -> DetectionResult:
        return self.detect(video)
