"""Common no-box perturbations: four image-based, three video-based, plus
an optional round-trip through an external MPEG-4 encoder.

Image-based kinds operate on a single (H, W, C) frame and are mapped over
a video's frames by :func:`apply`.  All stochastic kinds are pure
functions of (input, parameter, seed).
"""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage
from scipy.fft import dctn, idctn

from .errors import DimensionError, EncoderUnavailableError
from .video import Video, read_container, video_from_array, write_container

IMAGE_KINDS = ("jpeg", "gaussian_noise", "gaussian_blur", "crop")
VIDEO_KINDS = ("mpeg4", "frame_average", "frame_swap", "frame_removal")

# ITU-T T.81 Annex K luminance quantization table, applied per channel.
_QUANT_BASE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


def quantization_table(quality: float) -> np.ndarray:
    """Annex-K quality scaling of the base luminance table, clipped to [1, 255]."""
    if not 1 <= quality <= 100:
        raise ValueError(f"JPEG quality must be in [1, 100], got {quality}")
    scale = 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality
    table = np.floor((_QUANT_BASE * scale + 50.0) / 100.0)
    return np.clip(table, 1.0, 255.0)


def jpeg(frame: np.ndarray, quality: float) -> np.ndarray:
    """8x8 block DCT quantization round-trip (no chroma subsampling/entropy)."""
    table = quantization_table(quality)
    frame = np.asarray(frame, dtype=np.float64)
    h, w, c = frame.shape
    pad_h, pad_w = (-h) % 8, (-w) % 8
    out = np.empty_like(frame)
    for ch in range(c):
        plane = frame[:, :, ch] * 255.0 - 128.0
        if pad_h or pad_w:
            plane = np.pad(plane, ((0, pad_h), (0, pad_w)), mode="edge")
        bh, bw = plane.shape[0] // 8, plane.shape[1] // 8
        blocks = plane.reshape(bh, 8, bw, 8).transpose(0, 2, 1, 3)
        coeff = dctn(blocks, axes=(2, 3), norm="ortho")
        coeff = np.round(coeff / table) * table
        restored = idctn(coeff, axes=(2, 3), norm="ortho")
        plane = restored.transpose(0, 2, 1, 3).reshape(bh * 8, bw * 8)
        out[:, :, ch] = (plane[:h, :w] + 128.0) / 255.0
    return np.clip(out, 0.0, 1.0)


def gaussian_noise(frame: np.ndarray, sigma: float, seed: int = 0) -> np.ndarray:
    """Add i.i.d. zero-mean gaussian noise, then clamp to [0, 1]."""
    if sigma < 0:
        raise ValueError(f"noise sigma must be >= 0, got {sigma}")
    frame = np.asarray(frame, dtype=np.float64)
    if sigma == 0:
        return frame.copy()
    rng = np.random.default_rng(seed)
    return np.clip(frame + rng.normal(0.0, sigma, size=frame.shape), 0.0, 1.0)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled gaussian of radius ceil(3*sigma), renormalized to sum 1."""
    radius = int(np.ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(frame: np.ndarray, sigma: float) -> np.ndarray:
    """Separable gaussian convolution with reflected edges."""
    if sigma < 0:
        raise ValueError(f"blur sigma must be >= 0, got {sigma}")
    frame = np.asarray(frame, dtype=np.float64)
    if sigma == 0:
        return frame.copy()
    kernel = gaussian_kernel(sigma)
    out = ndimage.convolve1d(frame, kernel, axis=0, mode="reflect")
    out = ndimage.convolve1d(out, kernel, axis=1, mode="reflect")
    return np.clip(out, 0.0, 1.0)


def _resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-aligned sample centers."""
    in_h, in_w = image.shape[:2]
    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)[:, None, None]
    wx = np.clip(xs - x0, 0.0, 1.0)[None, :, None]
    top = image[y0][:, x0] * (1 - wx) + image[y0][:, x1] * wx
    bottom = image[y1][:, x0] * (1 - wx) + image[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def crop(frame: np.ndarray, proportion: float) -> np.ndarray:
    """Center-crop to an area fraction, then bilinear-resize back to H x W."""
    if not 0.0 < proportion <= 1.0:
        raise ValueError(f"crop proportion must be in (0, 1], got {proportion}")
    frame = np.asarray(frame, dtype=np.float64)
    h, w = frame.shape[:2]
    side = float(np.sqrt(proportion))
    crop_h = max(1, int(round(h * side)))
    crop_w = max(1, int(round(w * side)))
    top = (h - crop_h) // 2
    left = (w - crop_w) // 2
    window = frame[top:top + crop_h, left:left + crop_w]
    return np.clip(_resize_bilinear(window, h, w), 0.0, 1.0)


def frame_average(video: Video, window: int) -> Video:
    """Replace each frame by the mean over a centered window of N frames."""
    if window < 1 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 1, got {window}")
    if window == 1:
        return video
    half = window // 2
    frames = video.frames.astype(np.float64)
    out = np.empty_like(frames)
    for i in range(video.frame_count):
        lo = max(0, i - half)
        hi = min(video.frame_count, i + half + 1)
        out[i] = frames[lo:hi].mean(axis=0)
    return video_from_array(out)


def frame_swap(video: Video, probability: float, seed: int = 0) -> Video:
    """Sweep frames in order; with probability p swap with a random neighbor."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"swap probability must be in [0, 1], got {probability}")
    order = list(range(video.frame_count))
    rng = np.random.default_rng(seed)
    for i in range(len(order)):
        if rng.random() >= probability:
            continue
        neighbors = [j for j in (i - 1, i + 1) if 0 <= j < len(order)]
        if not neighbors:
            continue
        j = neighbors[int(rng.integers(len(neighbors)))]
        order[i], order[j] = order[j], order[i]
    return Video(video.frames[order])


def frame_removal(video: Video, probability: float, seed: int = 0) -> Video:
    """Drop each frame independently with probability p, keeping at least one."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"removal probability must be in [0, 1], got {probability}")
    rng = np.random.default_rng(seed)
    keep = rng.random(video.frame_count) >= probability
    if not keep.any():
        keep[0] = True
    return Video(video.frames[keep])


def mpeg4_external(video: Video, quality: float, encoder_command: Optional[str]) -> Video:
    """Round-trip a video through a user-configured external encoder.

    ``encoder_command`` is a shell-less template with ``{input}``,
    ``{output}`` and ``{Q}`` placeholders; input and output are ``.vmb``
    files.  Providing the template is what enables the feature.
    """
    if not encoder_command:
        raise EncoderUnavailableError(
            "no external encoder configured; set an encoder command template"
        )
    with tempfile.TemporaryDirectory(prefix="framemark-mpeg4-") as tmp:
        src = os.path.join(tmp, "in.vmb")
        dst = os.path.join(tmp, "out.vmb")
        write_container(video, src)
        argv = [
            part.format(input=src, output=dst, Q=quality)
            for part in shlex.split(encoder_command)
        ]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except FileNotFoundError as exc:
            raise EncoderUnavailableError(f"encoder binary not found: {argv[0]}") from exc
        if proc.returncode != 0:
            raise EncoderUnavailableError(
                f"encoder exited with {proc.returncode}: {proc.stderr.strip()[:500]}"
            )
        if not os.path.exists(dst):
            raise EncoderUnavailableError("encoder produced no output file")
        result = read_container(dst)
    if result.shape != video.shape:
        raise DimensionError(
            f"encoder changed video shape from {video.shape} to {result.shape}"
        )
    return result


@dataclass(frozen=True)
class Perturbation:
    """One named perturbation with its scalar parameter and optional seed."""

    kind: str
    parameter: float
    seed: int = 0
    encoder_command: Optional[str] = None

    def __post_init__(self):
        if self.kind not in IMAGE_KINDS + VIDEO_KINDS:
            raise ValueError(
                f"unknown perturbation {self.kind!r}; expected one of "
                f"{IMAGE_KINDS + VIDEO_KINDS}"
            )


def apply(perturbation: Perturbation, video: Video) -> Video:
    """Dispatch: image kinds map over frames, video kinds act on the sequence."""
    kind, param = perturbation.kind, perturbation.parameter
    if kind == "jpeg":
        frames = [jpeg(f, param) for f in video.frames]
        return video_from_array(np.stack(frames))
    if kind == "gaussian_noise":
        rng = np.random.default_rng(perturbation.seed)
        frames = [
            gaussian_noise(f, param, seed=int(rng.integers(2**63)))
            for f in video.frames
        ]
        return video_from_array(np.stack(frames))
    if kind == "gaussian_blur":
        frames = [gaussian_blur(f, param) for f in video.frames]
        return video_from_array(np.stack(frames))
    if kind == "crop":
        frames = [crop(f, param) for f in video.frames]
        return video_from_array(np.stack(frames))
    if kind == "frame_average":
        return frame_average(video, int(param))
    if kind == "frame_swap":
        return frame_swap(video, param, seed=perturbation.seed)
    if kind == "frame_removal":
        return frame_removal(video, param, seed=perturbation.seed)
    return mpeg4_external(video, param, perturbation.encoder_command)
