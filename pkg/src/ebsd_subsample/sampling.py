"""Probe-position subsampling and the masked acquisition model.

A SamplingSet is the set of probe positions actually visited; applying it
to a map keeps measured pixels (plus optional Gaussian noise) and zeroes
the rest, with the observed set recorded separately so correctness never
depends on the zero sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .maps_io import MapImage


@dataclass(frozen=True)
class SamplingSet:
    """Subsampled probe positions: M sorted distinct indices out of n_positions."""

    n_positions: int
    indices: np.ndarray
    seed: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        idx = np.sort(idx)
        if idx.size < 1 or idx.size > self.n_positions:
            raise ValueError("need 1 <= M <= n_positions indices")
        if idx[0] < 0 or idx[-1] >= self.n_positions:
            raise ValueError("index out of range")
        if np.any(np.diff(idx) == 0):
            raise ValueError("indices must be distinct")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @property
    def m(self) -> int:
        return int(self.indices.size)

    @property
    def ratio(self) -> float:
        return self.m / self.n_positions

    def observed_mask(self) -> np.ndarray:
        """Boolean flat mask of length n_positions, True on the sampled set."""
        mask = np.zeros(self.n_positions, dtype=bool)
        mask[self.indices] = True
        return mask


@dataclass(frozen=True)
class MaskedMap:
    """A measured map: values defined on the sampled set, zero elsewhere."""

    map: MapImage
    sampling: SamplingSet
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.sampling.n_positions != self.map.n_positions:
            raise ValueError("sampling set size does not match map")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def generate_uniform_mask(n_positions: int, ratio: float, seed: int) -> SamplingSet:
    """Draw round(ratio * n_positions) positions uniformly without replacement.

    Reproducible: the same (n_positions, ratio, seed) always yields the
    same set.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio {ratio} not in (0, 1]")
    m = int(round(ratio * n_positions))
    if m < 1:
        raise ValueError("ratio too small: no positions selected")
    rng = np.random.default_rng(seed)
    indices = rng.permutation(n_positions)[:m]
    return SamplingSet(n_positions=n_positions, indices=indices, seed=seed)


def apply_acquisition(
    image: MapImage, sampling: SamplingSet, noise_sigma: float = 0.0, seed: int = 0
) -> MaskedMap:
    """Simulate acquisition: keep sampled positions, add per-pixel noise.

    Noise is drawn per position-channel from the seed; measured values are
    clamped to [0, 1]. Unsampled positions hold 0 and are recorded as
    unobserved via the sampling set.
    """
    if sampling.n_positions != image.n_positions:
        raise ValueError("sampling set size does not match map")
    flat = image.data.reshape(image.n_positions, image.channels).copy()
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        noise = rng.normal(0.0, noise_sigma, size=flat.shape)
        flat = np.clip(flat + noise, 0.0, 1.0)
    keep = sampling.observed_mask()
    flat[~keep, :] = 0.0
    masked_image = image.with_data(flat.reshape(image.data.shape))
    return MaskedMap(map=masked_image, sampling=sampling, noise_sigma=noise_sigma)


def acquisition_time_estimate(
    n_positions: int, ratio: float, patterns_per_second: float
) -> float:
    """Acquisition time in seconds; proportional to the sampling ratio."""
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio {ratio} not in (0, 1]")
    if patterns_per_second <= 0:
        raise ValueError("patterns_per_second must be > 0")
    return ratio * n_positions / patterns_per_second


def save_mask(sampling: SamplingSet, path) -> None:
    """Plain-text mask file: 'n_positions M seed' then one index per line."""
    lines = [f"{sampling.n_positions} {sampling.m} {sampling.seed}"]
    lines.extend(str(i) for i in sampling.indices)
    Path(path).write_text("\n".join(lines) + "\n")


def load_mask(path) -> SamplingSet:
    text = Path(path).read_text().split()
    if len(text) < 4:
        raise ValueError("mask file too short")
    n_positions, m, seed = int(text[0]), int(text[1]), int(text[2])
    indices = np.array([int(t) for t in text[3:]], dtype=np.int64)
    if indices.size != m:
        raise ValueError(f"expected {m} indices, found {indices.size}")
    return SamplingSet(n_positions=n_positions, indices=indices, seed=seed)
