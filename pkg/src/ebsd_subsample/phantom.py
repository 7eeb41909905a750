"""Synthetic Voronoi grain-structure maps.

Stand-in ground truth for evaluation: piecewise-constant grains with dark
soft boundaries in the band-contrast channel and hard-edged per-grain RGB
in the IPF-style map, mimicking the statistics of real indexed maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from .maps_io import MapImage, MapKind


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 256
    height: int = 256
    n_grains: int = 60
    boundary_width_px: float = 1.5
    seed: int = 0
    bc_grain_low: float = 0.5
    bc_grain_high: float = 0.9
    bc_boundary_level: float = 0.4

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.n_grains < 1:
            raise ValueError("dimensions and grain count must be positive")
        if self.n_grains > self.width * self.height:
            raise ValueError("more grains than pixels")
        if not 0.0 <= self.bc_grain_low <= self.bc_grain_high <= 1.0:
            raise ValueError("bad band-contrast grain range")
        if not 0.0 <= self.bc_boundary_level < self.bc_grain_low:
            raise ValueError("boundary level must sit below the grain range")
        if self.boundary_width_px <= 0:
            raise ValueError("boundary width must be positive")


def _voronoi_labels(spec: PhantomSpec, seeds: np.ndarray) -> np.ndarray:
    """Nearest-seed label per pixel; ties resolve to the lowest seed index."""
    ys, xs = np.mgrid[0 : spec.height, 0 : spec.width]
    d2 = (xs[:, :, None] - seeds[None, None, :, 0]) ** 2 + (
        ys[:, :, None] - seeds[None, None, :, 1]
    ) ** 2
    return np.argmin(d2, axis=2)


def _adjacent_pairs(labels: np.ndarray) -> set[tuple[int, int]]:
    pairs = set()
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        diff = a != b
        for u, v in zip(a[diff].ravel(), b[diff].ravel()):
            pairs.add((min(u, v), max(u, v)))
    return pairs


def _grain_colors(
    n_grains: int, adjacency: set[tuple[int, int]], rng: np.random.Generator
) -> np.ndarray:
    """Per-grain RGB, re-drawn so adjacent grains stay visually distinct."""
    colors = rng.random((n_grains, 3))
    for _ in range(100):
        bad = set()
        for u, v in adjacency:
            if np.max(np.abs(colors[u] - colors[v])) < 0.1:
                bad.add(v)
        if not bad:
            break
        for g in sorted(bad):
            colors[g] = rng.random(3)
    return colors


def generate_phantom(spec: PhantomSpec) -> tuple[MapImage, MapImage, np.ndarray]:
    """Return (band_contrast, ipf, labels) for a random Voronoi microstructure.

    Band contrast is a per-grain constant depressed toward the boundary
    level within boundary_width_px of a label change; the IPF map has hard
    grain edges. Deterministic in the spec's seed.
    """
    rng = np.random.default_rng(spec.seed)
    # unique pixel seeds so every grain owns at least its own seed pixel
    flat = rng.choice(spec.width * spec.height, size=spec.n_grains, replace=False)
    seeds = np.stack([flat % spec.width, flat // spec.width], axis=1)
    labels = _voronoi_labels(spec, seeds)

    grain_bc = rng.uniform(spec.bc_grain_low, spec.bc_grain_high, size=spec.n_grains)
    colors = _grain_colors(spec.n_grains, _adjacent_pairs(labels), rng)

    # distance to the nearest pixel belonging to another grain
    boundary = np.zeros_like(labels, dtype=bool)
    boundary[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    boundary[:, 1:] |= labels[:, :-1] != labels[:, 1:]
    boundary[:-1, :] |= labels[:-1, :] != labels[1:, :]
    boundary[1:, :] |= labels[:-1, :] != labels[1:, :]
    if boundary.any():
        dist = distance_transform_edt(~boundary)
    else:
        dist = np.full(labels.shape, np.inf)

    t = np.clip(dist / spec.boundary_width_px, 0.0, 1.0)
    bc = spec.bc_boundary_level + t * (grain_bc[labels] - spec.bc_boundary_level)
    band_contrast = MapImage(
        spec.width, spec.height, 1, bc[:, :, None], MapKind.BAND_CONTRAST
    )
    ipf = MapImage(spec.width, spec.height, 3, colors[labels], MapKind.IPF)
    return band_contrast, ipf, labels
