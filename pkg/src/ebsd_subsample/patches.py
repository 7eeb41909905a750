"""Overlapping patch extraction and reassembly.

Patches are B x B, anchored on a stride grid whose last anchor is clamped
so the final patch ends exactly at the image border; every pixel is covered
by at least one patch. Patch vectors are channel-interleaved (all of
channel 0 row-major, then channel 1, ...), so an IPF patch is one vector
of length 3*B^2 and color is reconstructed jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .maps_io import MapImage
from .sampling import MaskedMap


def _anchors(extent: int, patch_size: int, stride: int) -> np.ndarray:
    last = extent - patch_size
    anchors = list(range(0, last + 1, stride))
    if anchors[-1] != last:
        anchors.append(last)
    return np.array(anchors, dtype=np.int64)


@dataclass(frozen=True)
class PatchGeometry:
    patch_size: int
    stride: int
    image_width: int
    image_height: int
    channels: int

    def __post_init__(self):
        if self.patch_size < 1 or not 1 <= self.stride <= self.patch_size:
            raise ValueError("need 1 <= stride <= patch_size")
        if self.patch_size > min(self.image_width, self.image_height):
            raise ValueError("patch larger than image")

    @property
    def row_anchors(self) -> np.ndarray:
        return _anchors(self.image_height, self.patch_size, self.stride)

    @property
    def col_anchors(self) -> np.ndarray:
        return _anchors(self.image_width, self.patch_size, self.stride)

    @property
    def n_patches(self) -> int:
        return len(self.row_anchors) * len(self.col_anchors)

    @property
    def patch_len(self) -> int:
        return self.patch_size * self.patch_size * self.channels


@dataclass(frozen=True)
class PatchSet:
    """Vectorized patches (N x P) plus per-element observation flags."""

    geometry: PatchGeometry
    patches: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        n, p = self.geometry.n_patches, self.geometry.patch_len
        if self.patches.shape != (n, p) or self.observed.shape != (n, p):
            raise ValueError("patch matrix shape does not match geometry")


def _patch_views(array: np.ndarray, geom: PatchGeometry) -> np.ndarray:
    """Stack all (B, B, C) windows into an (N, B*B*C) matrix.

    Vector layout is channel-major: element c*B*B + r*B + col.
    """
    b = geom.patch_size
    out = np.empty((geom.n_patches, geom.patch_len), dtype=array.dtype)
    i = 0
    for r in geom.row_anchors:
        for c in geom.col_anchors:
            window = array[r : r + b, c : c + b, :]
            out[i] = window.transpose(2, 0, 1).reshape(-1)
            i += 1
    return out


def extract_patches(masked: MaskedMap, patch_size: int, stride: int) -> PatchSet:
    """Slice a masked map into overlapping vectorized patches with flags.

    All channels of one pixel share a single observation flag, taken from
    the sampling set.
    """
    image = masked.map
    geom = PatchGeometry(patch_size, stride, image.width, image.height, image.channels)
    patches = _patch_views(image.data, geom)
    obs_image = np.repeat(
        masked.sampling.observed_mask().reshape(image.height, image.width, 1),
        image.channels,
        axis=2,
    )
    observed = _patch_views(obs_image, geom)
    return PatchSet(geometry=geom, patches=patches, observed=observed)


def reassemble(
    patches: np.ndarray,
    geom: PatchGeometry,
    masked: MaskedMap,
    keep_measured: bool = True,
    weights: np.ndarray | None = None,
) -> MapImage:
    """Average overlapping patches back into a full map.

    Each pixel is the mean over all patches covering it, weighted by the
    optional per-patch weights; pixels covered only by zero-weight patches
    fall back to the unweighted mean so every pixel gets a value. With
    keep_measured, sampled positions are then overwritten with the measured
    values. Output is clamped to [0, 1].
    """
    if patches.shape != (geom.n_patches, geom.patch_len):
        raise ValueError("patch matrix shape does not match geometry")
    if weights is None:
        weights = np.ones(geom.n_patches)
    elif weights.shape != (geom.n_patches,) or np.any(weights < 0):
        raise ValueError("need one non-negative weight per patch")
    image = masked.map
    if (geom.image_width, geom.image_height, geom.channels) != (
        image.width,
        image.height,
        image.channels,
    ):
        raise ValueError("geometry does not match map")
    b = geom.patch_size
    accum = np.zeros((image.height, image.width, image.channels), dtype=np.float64)
    count = np.zeros((image.height, image.width, 1), dtype=np.float64)
    accum_flat = np.zeros_like(accum)
    count_flat = np.zeros_like(count)
    i = 0
    for r in geom.row_anchors:
        for c in geom.col_anchors:
            block = patches[i].reshape(image.channels, b, b).transpose(1, 2, 0)
            accum_flat[r : r + b, c : c + b, :] += block
            count_flat[r : r + b, c : c + b, 0] += 1.0
            if weights[i] > 0:
                accum[r : r + b, c : c + b, :] += weights[i] * block
                count[r : r + b, c : c + b, 0] += weights[i]
            i += 1
    result = np.where(
        count > 0, accum / np.maximum(count, 1.0e-300), accum_flat / count_flat
    )
    if keep_measured:
        flat = result.reshape(image.n_positions, image.channels)
        measured = image.data.reshape(image.n_positions, image.channels)
        on = masked.sampling.indices
        flat[on, :] = measured[on, :]
        result = flat.reshape(result.shape)
    return image.with_data(np.clip(result, 0.0, 1.0))
