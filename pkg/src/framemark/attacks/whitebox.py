"""Gradient attacks against the differentiable reference codec.

Two settings: sign-step projected gradient descent with an l-infinity
budget applied to every frame, and unconstrained (pixel-box only)
optimization of a chosen frame subset via a sign-weighted logit sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from ..aggregate import AggregationStrategy, StrategyKind, detect
from ..codec import CodecKey, Watermark, bitwise_accuracy, carriers, decode_video, round_logits
from ..errors import DimensionError
from ..threshold import select_tau
from ..video import Video

MODES = ("removal", "forgery")


@dataclass(frozen=True)
class WhiteboxConfig:
    """Attack mode plus optimizer schedule.

    ``epsilon`` bounds the per-pixel perturbation in the bounded scenario.
    ``frame_mask`` (one flag per frame, 1 = attackable) switches to the
    subset scenario, where perturbations are unbounded apart from the
    [0, 1] pixel box.  ``step_size`` defaults to ``2.5 * epsilon / steps``
    for the bounded scenario and 0.05 for the subset scenario.
    """

    mode: str
    epsilon: float = 0.05
    steps: int = 200
    step_size: Optional[float] = None
    frame_mask: Optional[tuple[int, ...]] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.frame_mask is not None:
            mask = tuple(int(bool(v)) for v in self.frame_mask)
            if not any(mask):
                raise ValueError("frame_mask must select at least one frame")
            object.__setattr__(self, "frame_mask", mask)


def linf_bounds_f32(reference: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Float32 bounds of the l-inf ball around ``reference`` within [0, 1].

    Casting a float64 value at the ball boundary to float32 can round
    outward; such bounds are nudged inward by one ulp, so any float32
    array clipped to them deviates from ``reference`` by at most epsilon.
    """
    ref = np.asarray(reference, dtype=np.float64)
    lo64 = np.maximum(ref - epsilon, 0.0)
    hi64 = np.minimum(ref + epsilon, 1.0)
    lo32 = lo64.astype(np.float32)
    hi32 = hi64.astype(np.float32)
    lo32 = np.where(lo32.astype(np.float64) < lo64, np.nextafter(lo32, np.float32(np.inf)), lo32)
    hi32 = np.where(hi32.astype(np.float64) > hi64, np.nextafter(hi32, np.float32(-np.inf)), hi32)
    return lo32, hi32


def clip_linf_f32(reference: np.ndarray, perturbed: np.ndarray, epsilon: float) -> np.ndarray:
    """Project onto the l-inf ball and [0,1] box so the float32 result still
    deviates from ``reference`` by at most ``epsilon``."""
    lo32, hi32 = linf_bounds_f32(reference, epsilon)
    return np.clip(perturbed.astype(np.float32), lo32, hi32)


def _flat_carriers(key: CodecKey) -> np.ndarray:
    return carriers(key).reshape(key.n, -1)


def _bce_and_grad(flat_frames: np.ndarray, key: CodecKey, wg: Watermark):
    """Mean BCE between sigmoid-gain logits and target bits, plus gradient.

    Uses the stable form BCE = softplus(z) - w*z on z = beta * correlation,
    whose frame gradient is (sigmoid(z) - w) @ carriers * beta / (n * HWC).
    """
    cmat = _flat_carriers(key)
    corr = (flat_frames - 0.5) @ cmat.T / key.pixels_per_frame
    z = key.beta * corr
    w = wg.bits.astype(np.float64)
    softplus = np.logaddexp(0.0, z)
    loss = (softplus - w * z).mean(axis=1)
    sig = 1.0 / (1.0 + np.exp(-z))
    grad = (sig - w) @ cmat * (key.beta / (key.n * key.pixels_per_frame))
    return loss, grad


def pgd_bounded(
    video: Video, key: CodecKey, wg: Watermark, cfg: WhiteboxConfig
) -> tuple[Video, np.ndarray]:
    """Sign-step PGD on every frame under ``||delta||_inf <= epsilon``.

    Removal ascends the decode-vs-watermark loss; forgery descends it.
    Returns the perturbed video and the final per-frame bitwise accuracies.
    """
    if cfg.frame_mask is not None:
        raise ValueError("pgd_bounded is the all-frames scenario; frame_mask must be absent")
    if not cfg.epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {cfg.epsilon}")
    if video.shape[1:] != key.frame_shape:
        raise DimensionError(f"video frames {video.shape[1:]} do not match key {key.frame_shape}")

    eps = float(cfg.epsilon)
    step = cfg.step_size if cfg.step_size is not None else 2.5 * eps / max(cfg.steps, 1)
    sign = 1.0 if cfg.mode == "removal" else -1.0

    base = video.frames.reshape(video.frame_count, -1).astype(np.float64)
    adv = base.copy()
    for _ in range(cfg.steps):
        _, grad = _bce_and_grad(adv, key, wg)
        adv = adv + sign * step * np.sign(grad)
        adv = np.clip(adv, np.maximum(base - eps, 0.0), np.minimum(base + eps, 1.0))

    out32 = clip_linf_f32(base, adv, eps).reshape(video.shape)
    result = Video(out32)
    logits = decode_video(result, key)
    accuracies = np.array(
        [bitwise_accuracy(bits, wg) for bits in round_logits(logits)]
    )
    return result, accuracies


def subset_arbitrary(video: Video, key: CodecKey, wg: Watermark, cfg: WhiteboxConfig) -> Video:
    """Optimize only masked frames with the sign-weighted logit-sum objective.

    Removal pushes each logit away from its watermark bit's side; forgery
    pushes toward it.  Pixels stay in [0, 1] but there is no epsilon ball;
    unmasked frames are returned bit-identical.
    """
    if cfg.frame_mask is None:
        raise ValueError("subset_arbitrary requires cfg.frame_mask")
    if len(cfg.frame_mask) != video.frame_count:
        raise DimensionError(
            f"frame_mask length {len(cfg.frame_mask)} != frame count {video.frame_count}"
        )
    if video.shape[1:] != key.frame_shape:
        raise DimensionError(f"video frames {video.shape[1:]} do not match key {key.frame_shape}")

    step = cfg.step_size if cfg.step_size is not None else 0.05
    # Ascend sum_j signs_j * logit_j, where signs = sign(w - 1/2) for
    # forgery and its negation for removal.
    signs = wg.signs() if cfg.mode == "forgery" else -wg.signs()

    mask = np.asarray(cfg.frame_mask, dtype=bool)
    attacked = video.frames[mask].astype(np.float64)
    if key.activation == "sigmoid":
        cmat = _flat_carriers(key)
        flat = attacked.reshape(attacked.shape[0], -1)
        for _ in range(cfg.steps):
            corr = (flat - 0.5) @ cmat.T / key.pixels_per_frame
            y = 1.0 / (1.0 + np.exp(-key.beta * corr))
            grad = (signs * y * (1.0 - y)) @ cmat * (key.beta / key.pixels_per_frame)
            flat = np.clip(flat + step * np.sign(grad), 0.0, 1.0)
        attacked = flat.reshape(attacked.shape)
    else:
        # Linear activation: the gradient field is constant, so every step
        # moves along its sign until pixels rail at the box.
        direction = np.tensordot(signs, carriers(key), axes=1)
        for _ in range(cfg.steps):
            attacked = np.clip(attacked + step * np.sign(direction), 0.0, 1.0)

    out = np.array(video.frames, copy=True)
    out[mask] = attacked.astype(np.float32)
    return Video(out)


@dataclass(frozen=True)
class MinEpsilonResult:
    epsilon: float
    found: bool
    grid: tuple[float, ...]


DEFAULT_EPSILON_GRID = tuple(float(e) for e in np.geomspace(0.004, 0.2, 18))


def default_search_strategy(n: int) -> AggregationStrategy:
    return AggregationStrategy(StrategyKind.BA_MEAN, select_tau(n, 1e-4))


def min_epsilon_search(
    video: Video,
    key: CodecKey,
    wg: Watermark,
    mode: str,
    steps: int = 60,
    strategy: Optional[AggregationStrategy] = None,
    grid: Optional[Sequence[float]] = None,
) -> MinEpsilonResult:
    """Smallest grid epsilon at which the bounded attack flips the verdict.

    Scans the geometric grid upward and stops at the first success, so the
    reported epsilon is exactly the smallest succeeding grid point.  If no
    grid point succeeds, returns the grid maximum with ``found=False``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if strategy is None:
        strategy = default_search_strategy(key.n)
    grid = tuple(float(e) for e in (grid if grid is not None else DEFAULT_EPSILON_GRID))
    if not grid or any(e <= 0 for e in grid) or list(grid) != sorted(grid):
        raise ValueError("epsilon grid must be positive and ascending")

    want_watermarked = mode == "forgery"
    for eps in grid:
        cfg = WhiteboxConfig(mode=mode, epsilon=eps, steps=steps)
        attacked, _ = pgd_bounded(video, key, wg, cfg)
        verdict = detect(decode_video(attacked, key), wg, strategy)
        if verdict.watermarked == want_watermarked:
            return MinEpsilonResult(eps, True, grid)
    return MinEpsilonResult(grid[-1], False, grid)
