"""Video container type, file I/O, and the synthetic clip generator.

A video is a stack of frames with pixel values in [0, 1], stored as a
read-only float32 array of shape (F, H, W, C).  The on-disk ``.vmb``
container holds the same float32 payload verbatim, so write/read
round-trips are bit-exact.
"""

from __future__ import annotations

import os
import re
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import ContainerError, DimensionError

_MAGIC = b"VMB1"
_HEADER = struct.Struct("<4sIIII")
_MAX_DIM = 2**31 - 1


@dataclass(frozen=True, eq=False)
class Video:
    """Immutable frame stack; pixels float32 in [0, 1], shape (F, H, W, C)."""

    frames: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.frames, dtype=np.float32)
        if arr.ndim == 3:
            arr = arr[..., np.newaxis]
        if arr.ndim != 4:
            raise DimensionError(f"expected (F, H, W, C) frames, got shape {arr.shape}")
        f, h, w, c = arr.shape
        if f < 1 or h < 1 or w < 1:
            raise DimensionError(f"empty video dimensions {arr.shape}")
        if c not in (1, 3):
            raise DimensionError(f"channel count must be 1 or 3, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("video contains non-finite pixels")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("video pixels outside [0, 1]")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def channels(self) -> int:
        return self.frames.shape[3]

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.frames.shape

    def frame(self, i: int) -> np.ndarray:
        return self.frames[i]


def video_from_array(arr: np.ndarray) -> Video:
    """Clamp an arbitrary float array into a valid Video."""
    arr = np.clip(np.asarray(arr, dtype=np.float64), 0.0, 1.0)
    return Video(arr.astype(np.float32))


def _unchecked_video(frames_f32: np.ndarray) -> Video:
    """Wrap an array already known to satisfy the Video invariants.

    Hot attack loops construct thousands of candidates per run; this skips
    the finite/range re-validation that Video() would repeat.  Callers must
    guarantee float32 (F, H, W, C) contents inside [0, 1].
    """
    video = object.__new__(Video)
    frames_f32 = np.ascontiguousarray(frames_f32, dtype=np.float32)
    frames_f32.setflags(write=False)
    object.__setattr__(video, "frames", frames_f32)
    return video


def atomic_write_bytes(path: str | os.PathLike, payload: bytes) -> None:
    """Write a file atomically (temp file + rename) in the target directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".framemark-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_container(video: Video, path: str | os.PathLike) -> None:
    """Serialize a video to the `.vmb` container (little-endian, float32)."""
    f, h, w, c = video.shape
    header = _HEADER.pack(_MAGIC, f, h, w, c)
    payload = video.frames.astype("<f4").tobytes()
    atomic_write_bytes(path, header + payload)


def read_container(path: str | os.PathLike) -> Video:
    """Read a `.vmb` container written by :func:`write_container`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ContainerError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, f, h, w, c = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ContainerError(f"{path}: bad magic {magic!r}")
    for dim in (f, h, w, c):
        if dim <= 0 or dim > _MAX_DIM:
            raise ContainerError(f"{path}: implausible dimension {dim}")
    expected = f * h * w * c * 4
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise ContainerError(
            f"{path}: payload is {len(body)} bytes, expected {expected}"
        )
    arr = np.frombuffer(body, dtype="<f4").reshape(f, h, w, c)
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise ContainerError(f"{path}: pixel values outside [0, 1]")
    return Video(arr.copy())


_PNG_NAME = re.compile(r"^(\d+)\.png$", re.IGNORECASE)


def read_png_dir(path: str | os.PathLike) -> Video:
    """Load a directory of numerically named 8-bit PNG frames as a video."""
    from PIL import Image

    path = os.fspath(path)
    entries = []
    for name in os.listdir(path):
        m = _PNG_NAME.match(name)
        if m:
            entries.append((int(m.group(1)), name))
    if not entries:
        raise ContainerError(f"{path}: no numerically named .png frames")
    entries.sort()
    frames = []
    for _, name in entries:
        with Image.open(os.path.join(path, name)) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            arr = np.asarray(img, dtype=np.float32) / 255.0
        if arr.ndim == 2:
            arr = arr[..., np.newaxis]
        frames.append(arr)
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise DimensionError(f"{path}: frames disagree on shape: {sorted(shapes)}")
    return Video(np.stack(frames))


def load_video(path: str | os.PathLike) -> Video:
    """Read either a `.vmb` file or a directory of PNG frames."""
    if os.path.isdir(path):
        return read_png_dir(path)
    return read_container(path)


def synth_video(
    frame_count: int,
    height: int,
    width: int,
    channels: int = 3,
    motion: str = "slow",
    seed: int = 0,
) -> Video:
    """Generate a deterministic procedural clip.

    The content is a translating linear gradient plus drifting sinusoidal
    blobs plus band-limited noise.  ``motion="fast"`` uses a larger
    per-frame displacement than ``"slow"``.
    """
    from scipy import ndimage

    if frame_count < 1 or height < 1 or width < 1:
        raise DimensionError(
            f"dimensions must be positive, got F={frame_count} H={height} W={width}"
        )
    if channels not in (1, 3):
        raise DimensionError(f"channel count must be 1 or 3, got {channels}")
    if motion not in ("slow", "fast"):
        raise ValueError(f"motion must be 'slow' or 'fast', got {motion!r}")

    rng = np.random.default_rng(seed)
    step = 4.0 if motion == "fast" else 1.0

    ys = np.arange(height, dtype=np.float64)[:, None]
    xs = np.arange(width, dtype=np.float64)[None, :]
    span = max(height + width, 2)

    # Orientation and drift of the base gradient.
    gdir = rng.uniform(0.0, 2.0 * np.pi)
    gx, gy = np.cos(gdir), np.sin(gdir)
    drift = rng.uniform(0.5, 1.5) * step

    # Two sinusoidal blobs per channel with slightly detuned frequencies.
    freqs = rng.uniform(1.0, 3.0, size=(channels, 2, 2))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(channels, 2))
    speeds = rng.uniform(0.05, 0.15, size=(channels, 2)) * step

    # Band-limited noise translated (wrapping) from frame to frame.
    noise = rng.normal(0.0, 1.0, size=(height, width))
    noise = ndimage.gaussian_filter(noise, sigma=2.5, mode="wrap")
    noise /= max(noise.std(), 1e-9)
    vx = int(round(rng.uniform(1.0, 2.0) * step))
    vy = int(round(rng.uniform(0.0, 1.0) * step))

    frames = np.empty((frame_count, height, width, channels), dtype=np.float64)
    for t in range(frame_count):
        ramp = (gx * (xs + drift * t) + gy * (ys + drift * t)) / span
        base = 0.5 + 0.15 * np.sin(2.0 * np.pi * ramp)
        moved = np.roll(noise, shift=(vy * t, vx * t), axis=(0, 1))
        for ch in range(channels):
            blobs = np.zeros((height, width))
            for b in range(2):
                fy, fx = freqs[ch, b]
                phase = phases[ch, b] + speeds[ch, b] * t
                blobs += np.sin(2.0 * np.pi * (fx * xs / width + fy * ys / height) + phase)
            frames[t, :, :, ch] = base + 0.05 * blobs + 0.04 * moved
    return video_from_array(frames)


def scale_contrast(video: Video, factor: float) -> Video:
    """Blend pixels toward mid-gray; factor 1 is identity, 0 is flat gray."""
    if not 0.0 <= factor <= 1.0:
        raise ValueError(f"contrast factor must be in [0, 1], got {factor}")
    return video_from_array(0.5 + factor * (video.frames.astype(np.float64) - 0.5))
