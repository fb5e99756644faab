"""Watermark bitstrings, codec keys, and the reference spread-spectrum codec.

The reference codec adds ``alpha * sum_j s_j * carrier_j`` to every frame,
where ``s_j`` is +1 for bit 1 and -1 for bit 0 and each carrier is a
pseudo-random +/-1 pattern drawn from a counter-based generator keyed on
``(seed, bit index)``.  Decoding correlates a frame against each carrier
and maps the correlation through a fixed-gain activation, so both the
decoder and its gradient have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import DimensionError
from .video import Video, video_from_array

_ACTIVATIONS = ("sigmoid", "linear")


@dataclass(frozen=True, eq=False)
class Watermark:
    """An n-bit payload; bits stored as a read-only uint8 array of 0/1."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError(f"watermark bits must be a non-empty vector, got shape {arr.shape}")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("watermark bits must be 0 or 1")
        arr = arr.astype(np.uint8)
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def n(self) -> int:
        return int(self.bits.size)

    @classmethod
    def random(cls, n: int, seed: int = 0) -> "Watermark":
        if n < 1:
            raise ValueError(f"watermark length must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8))

    @classmethod
    def from_hex(cls, text: str, n: int) -> "Watermark":
        """Unpack the first n bits (MSB first) of a hex string."""
        if n < 1:
            raise ValueError(f"watermark length must be >= 1, got {n}")
        data = bytes.fromhex(text)
        if len(data) * 8 < n:
            raise ValueError(f"hex string has {len(data) * 8} bits, need {n}")
        bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n]
        return cls(bits)

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    def signs(self) -> np.ndarray:
        """Bits mapped to +/-1 floats."""
        return self.bits.astype(np.float64) * 2.0 - 1.0


@dataclass(frozen=True)
class CodecKey:
    """Key material and tuning for the reference codec.

    ``activation="sigmoid"`` yields logits in (0, 1); ``"linear"`` yields
    unbounded logits ``0.5 + beta * correlation`` so the shared rounding
    rule (bit = logit >= 0.5) still applies.
    """

    seed: int
    n: int
    height: int
    width: int
    channels: int = 3
    alpha: float = 0.02
    beta: float = 50.0
    activation: str = "sigmoid"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"watermark length must be >= 1, got {self.n}")
        if self.height < 1 or self.width < 1 or self.channels not in (1, 3):
            raise DimensionError(
                f"bad frame dimensions {self.height}x{self.width}x{self.channels}"
            )
        if not self.alpha > 0.0:
            raise ValueError(f"embedding strength must be positive, got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"decoder gain must be positive, got {self.beta}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}")

    @property
    def frame_shape(self) -> tuple[int, int, int]:
        return (self.height, self.width, self.channels)

    @property
    def pixels_per_frame(self) -> int:
        return self.height * self.width * self.channels


@lru_cache(maxsize=16)
def _carriers_cached(seed: int, n: int, height: int, width: int, channels: int) -> np.ndarray:
    out = np.empty((n, height, width, channels), dtype=np.float64)
    for j in range(n):
        key = np.array([seed & 0xFFFFFFFFFFFFFFFF, j], dtype=np.uint64)
        gen = np.random.Generator(np.random.Philox(key=key))
        out[j] = gen.integers(0, 2, size=(height, width, channels)).astype(np.float64) * 2.0 - 1.0
    out.setflags(write=False)
    return out


def carriers(key: CodecKey) -> np.ndarray:
    """The n +/-1 carrier patterns for a key, shape (n, H, W, C), read-only."""
    return _carriers_cached(key.seed, key.n, key.height, key.width, key.channels)


def _check_frame(frame: np.ndarray, key: CodecKey) -> np.ndarray:
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape != key.frame_shape:
        raise DimensionError(f"frame shape {frame.shape} does not match key {key.frame_shape}")
    return frame


def _check_video(video: Video, key: CodecKey) -> None:
    if video.shape[1:] != key.frame_shape:
        raise DimensionError(
            f"video frames {video.shape[1:]} do not match key {key.frame_shape}"
        )


def _check_bits(wm: Watermark, key: CodecKey) -> None:
    if wm.n != key.n:
        raise DimensionError(f"watermark has {wm.n} bits, key expects {key.n}")


def embed_pattern(key: CodecKey, wm: Watermark) -> np.ndarray:
    """The additive watermark pattern ``alpha * sum_j s_j * carrier_j``."""
    _check_bits(wm, key)
    pattern = np.tensordot(wm.signs(), carriers(key), axes=1)
    return key.alpha * pattern


def embed(video: Video, key: CodecKey, wm: Watermark) -> Video:
    """Add the watermark pattern to every frame, clamped back to [0, 1]."""
    _check_video(video, key)
    pattern = embed_pattern(key, wm)
    return video_from_array(video.frames.astype(np.float64) + pattern)


def _correlate(flat_frames: np.ndarray, key: CodecKey) -> np.ndarray:
    flat_carriers = carriers(key).reshape(key.n, -1)
    return flat_frames @ flat_carriers.T / key.pixels_per_frame


def _activate(corr: np.ndarray, key: CodecKey) -> np.ndarray:
    z = key.beta * corr
    if key.activation == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return 0.5 + z


def decode_frame(frame: np.ndarray, key: CodecKey) -> np.ndarray:
    """Per-bit logits for one frame, length n."""
    frame = _check_frame(frame, key)
    corr = _correlate(frame.reshape(1, -1) - 0.5, key)[0]
    return _activate(corr, key)


def decode_video(video: Video, key: CodecKey) -> np.ndarray:
    """Logit matrix of shape (F, n), one row per frame in frame order."""
    _check_video(video, key)
    flat = video.frames.reshape(video.frame_count, -1).astype(np.float64) - 0.5
    return _activate(_correlate(flat, key), key)


def decoder_gradient(frame: np.ndarray, key: CodecKey, bit_weights: np.ndarray) -> np.ndarray:
    """Gradient of ``sum_j w_j * logit_j`` with respect to the frame pixels."""
    frame = _check_frame(frame, key)
    weights = np.asarray(bit_weights, dtype=np.float64)
    if weights.shape != (key.n,):
        raise DimensionError(f"bit_weights shape {weights.shape}, expected ({key.n},)")
    if key.activation == "sigmoid":
        corr = _correlate(frame.reshape(1, -1) - 0.5, key)[0]
        y = 1.0 / (1.0 + np.exp(-key.beta * corr))
        weights = weights * y * (1.0 - y)
    scale = key.beta / key.pixels_per_frame
    return scale * np.tensordot(weights, carriers(key), axes=1)


def round_logits(logits: np.ndarray) -> np.ndarray:
    """Round logits to bits: 1 where the logit is >= 0.5 (boundary inclusive)."""
    logits = np.asarray(logits)
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    return (logits >= 0.5).astype(np.uint8)


def _as_bits(value) -> np.ndarray:
    if isinstance(value, Watermark):
        return value.bits
    return np.asarray(value).astype(np.uint8)


def bitwise_accuracy(decoded, reference) -> float:
    """Fraction of matching bit positions between two equal-length bitstrings."""
    a, b = _as_bits(decoded), _as_bits(reference)
    if a.shape != b.shape:
        raise DimensionError(f"bitstring lengths differ: {a.shape} vs {b.shape}")
    return float(np.count_nonzero(a == b)) / a.size


@runtime_checkable
class Codec(Protocol):
    """Contract any watermark codec must satisfy to plug into detection."""

    @property
    def n(self) -> int: ...

    def embed(self, video: Video, wm: Watermark) -> Video: ...

    def decode_video(self, video: Video) -> np.ndarray: ...


class SpreadSpectrumCodec:
    """The built-in differentiable codec, bound to one key."""

    def __init__(self, key: CodecKey):
        self.key = key

    @property
    def n(self) -> int:
        return self.key.n

    def embed(self, video: Video, wm: Watermark) -> Video:
        return embed(video, self.key, wm)

    def decode_frame(self, frame: np.ndarray) -> np.ndarray:
        return decode_frame(frame, self.key)

    def decode_video(self, video: Video) -> np.ndarray:
        return decode_video(video, self.key)

    def decoder_gradient(self, frame: np.ndarray, bit_weights: np.ndarray) -> np.ndarray:
        return decoder_gradient(frame, self.key, bit_weights)

    def __repr__(self):
        return f"SpreadSpectrumCodec({self.key!r})"
