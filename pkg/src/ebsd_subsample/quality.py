"""Full-reference image quality metrics: SSIM and PSNR.

SSIM uses an 11x11 Gaussian window (sigma 1.5) and averages the local
SSIM map over the fully-windowed interior only; no padding. Multi-channel
images score as the unweighted mean of per-channel SSIM, so IPF hue errors
are penalized directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .maps_io import MapImage


@dataclass(frozen=True)
class SsimParams:
    window_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def window(self) -> np.ndarray:
        """Normalized 2-D Gaussian window."""
        half = (self.window_size - 1) / 2.0
        coords = np.arange(self.window_size) - half
        g = np.exp(-(coords**2) / (2.0 * self.sigma**2))
        w = np.outer(g, g)
        return w / w.sum()


def _check_dims(a: MapImage, b: MapImage) -> None:
    if (a.width, a.height, a.channels) != (b.width, b.height, b.channels):
        raise ValueError("image dimensions/channels differ")


def _ssim_channel(x: np.ndarray, y: np.ndarray, params: SsimParams) -> float:
    w = params.window()
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    mu_x = convolve2d(x, w, mode="valid")
    mu_y = convolve2d(y, w, mode="valid")
    var_x = convolve2d(x * x, w, mode="valid") - mu_x**2
    var_y = convolve2d(y * y, w, mode="valid") - mu_y**2
    cov = convolve2d(x * y, w, mode="valid") - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def ssim(a: MapImage, b: MapImage, params: SsimParams = SsimParams()) -> float:
    """Mean structural similarity over the window-valid interior."""
    _check_dims(a, b)
    if min(a.width, a.height) < params.window_size:
        raise ValueError("image smaller than SSIM window")
    scores = [
        _ssim_channel(a.data[:, :, c], b.data[:, :, c], params)
        for c in range(a.channels)
    ]
    return float(np.mean(scores))


def psnr(a: MapImage, b: MapImage, dynamic_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    _check_dims(a, b)
    mse = float(np.mean((a.data - b.data) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(dynamic_range**2 / mse)
