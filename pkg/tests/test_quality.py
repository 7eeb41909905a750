import math

import numpy as np
import pytest

from ebsd_subsample.maps_io import MapImage
from ebsd_subsample.quality import SsimParams, psnr, ssim


def _gaussian_window(size, sigma):
    half = (size - 1) / 2.0
    g = [math.exp(-((i - half) ** 2) / (2 * sigma**2)) for i in range(size)]
    w = [[gi * gj for gj in g] for gi in g]
    total = sum(sum(row) for row in w)
    return [[v / total for v in row] for row in w]


def ssim_oracle(a, b, params=SsimParams()):
    """Direct-summation SSIM, written independently of the library path."""
    win = _gaussian_window(params.window_size, params.sigma)
    c1 = (params.k1 * params.dynamic_range) ** 2
    c2 = (params.k2 * params.dynamic_range) ** 2
    size = params.window_size
    scores = []
    for ch in range(a.channels):
        x = a.data[:, :, ch]
        y = b.data[:, :, ch]
        vals = []
        for top in range(a.height - size + 1):
            for left in range(a.width - size + 1):
                mx = my = mxx = myy = mxy = 0.0
                for i in range(size):
                    for j in range(size):
                        wv = win[i][j]
                        xv = x[top + i, left + j]
                        yv = y[top + i, left + j]
                        mx += wv * xv
                        my += wv * yv
                        mxx += wv * xv * xv
                        myy += wv * yv * yv
                        mxy += wv * xv * yv
                vx = mxx - mx * mx
                vy = myy - my * my
                cxy = mxy - mx * my
                vals.append(
                    ((2 * mx * my + c1) * (2 * cxy + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2))
                )
        scores.append(sum(vals) / len(vals))
    return sum(scores) / len(scores)


def psnr_oracle(a, b):
    total = 0.0
    count = 0
    for v, w in zip(a.data.ravel(), b.data.ravel()):
        total += (v - w) ** 2
        count += 1
    if total == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / (total / count))


def _random_pair(seed, size=16, channels=1):
    rng = np.random.default_rng(seed)
    a = MapImage(size, size, channels, rng.random(size * size * channels))
    b = MapImage(size, size, channels, rng.random(size * size * channels))
    return a, b


def test_ssim_identity():
    a, _ = _random_pair(0)
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_inverted_halves_negative():
    data = np.zeros((64, 64))
    data[:, 32:] = 1.0
    a = MapImage(64, 64, 1, data.ravel())
    b = MapImage(64, 64, 1, (1.0 - data).ravel())
    value = ssim(a, b)
    assert value < 0
    assert value == pytest.approx(ssim_oracle(a, b), abs=1e-9)


def test_ssim_matches_oracle_random_pairs():
    for seed in range(8):
        a, b = _random_pair(seed)
        assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-9)


def test_ssim_matches_oracle_multichannel():
    a, b = _random_pair(100, channels=3)
    assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-9)


def test_ssim_symmetry():
    a, b = _random_pair(4)
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_one_iff_equal():
    a, b = _random_pair(6)
    assert ssim(a, b) < 1.0 - 1e-6


def test_ssim_luminance_shift_matches_oracle():
    rng = np.random.default_rng(8)
    base = rng.random(256) * 0.5
    a = MapImage(16, 16, 1, base)
    b = MapImage(16, 16, 1, base + 0.25)
    assert ssim(a, b) == pytest.approx(ssim_oracle(a, b), abs=1e-9)


def test_ssim_dim_mismatch():
    a, _ = _random_pair(0, size=16)
    c, _ = _random_pair(0, size=20)
    with pytest.raises(ValueError):
        ssim(a, c)


def test_psnr_identical_infinite():
    a, _ = _random_pair(1)
    assert math.isinf(psnr(a, a))


def test_psnr_constant_offset_closed_form():
    a = MapImage(8, 8, 1, np.full(64, 0.2))
    b = MapImage(8, 8, 1, np.full(64, 0.3))
    assert psnr(a, b) == pytest.approx(20.0, abs=1e-12)


def test_psnr_matches_oracle_random_pairs():
    for seed in range(8):
        a, b = _random_pair(seed + 50)
        assert psnr(a, b) == pytest.approx(psnr_oracle(a, b), abs=1e-9)


def test_psnr_symmetry():
    a, b = _random_pair(9)
    assert psnr(a, b) == pytest.approx(psnr(b, a), abs=1e-12)
