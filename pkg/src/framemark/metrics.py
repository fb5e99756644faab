"""Visual-quality metrics and the significance test used by the benchmark."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage, stats

from .errors import DimensionError
from .video import Video

_SSIM_C1 = 0.01**2
_SSIM_C2 = 0.03**2


def _paired(a: Video, b: Video) -> tuple[np.ndarray, np.ndarray]:
    if a.shape != b.shape:
        raise DimensionError(f"video shapes differ: {a.shape} vs {b.shape}")
    return a.frames.astype(np.float64), b.frames.astype(np.float64)


def psnr(a: Video, b: Video) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0; identical videos give inf."""
    x, y = _paired(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _ssim_window() -> np.ndarray:
    offsets = np.arange(-5, 6, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / 1.5) ** 2)
    return kernel / kernel.sum()


def _ssim_plane(x: np.ndarray, y: np.ndarray) -> float:
    """Mean SSIM over all fully-valid 11x11 windows of one channel plane."""
    kernel = _ssim_window()

    def smooth(img):
        out = ndimage.convolve1d(img, kernel, axis=0, mode="constant")
        return ndimage.convolve1d(out, kernel, axis=1, mode="constant")

    mu_x, mu_y = smooth(x), smooth(y)
    xx, yy, xy = smooth(x * x), smooth(y * y), smooth(x * y)
    var_x = xx - mu_x * mu_x
    var_y = yy - mu_y * mu_y
    cov = xy - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + _SSIM_C1) * (2 * cov + _SSIM_C2)) / (
        (mu_x**2 + mu_y**2 + _SSIM_C1) * (var_x + var_y + _SSIM_C2)
    )
    valid = ssim_map[5:-5, 5:-5]
    return float(valid.mean())


def ssim(a: Video, b: Video) -> float:
    """Single-scale SSIM (11x11 gaussian window, sigma 1.5), averaged over
    frames and channels.  Frames must be at least 11x11."""
    x, y = _paired(a, b)
    if a.height < 11 or a.width < 11:
        raise DimensionError(f"SSIM needs frames >= 11x11, got {a.height}x{a.width}")
    values = [
        _ssim_plane(x[f, :, :, c], y[f, :, :, c])
        for f in range(a.frame_count)
        for c in range(a.channels)
    ]
    return float(np.mean(values))


def welch_t_test(xs, ys) -> float:
    """Two-tailed Welch t-test p-value (unequal variances)."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size < 2 or ys.size < 2:
        raise ValueError(f"both samples need >= 2 points, got {xs.size} and {ys.size}")
    vx = xs.var(ddof=1)
    vy = ys.var(ddof=1)
    if vx == 0.0 and vy == 0.0:
        raise ValueError("both samples have zero variance; t statistic undefined")
    sx, sy = vx / xs.size, vy / ys.size
    t = (xs.mean() - ys.mean()) / math.sqrt(sx + sy)
    df = (sx + sy) ** 2 / (sx**2 / (xs.size - 1) + sy**2 / (ys.size - 1))
    return float(2.0 * stats.t.sf(abs(t), df))
