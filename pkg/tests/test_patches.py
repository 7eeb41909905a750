import numpy as np
import pytest

from ebsd_subsample.maps_io import MapImage
from ebsd_subsample.patches import PatchGeometry, extract_patches, reassemble
from ebsd_subsample.sampling import apply_acquisition, generate_uniform_mask


def _masked(width, height, channels=1, ratio=1.0, seed=0, values=None):
    rng = np.random.default_rng(seed)
    if values is None:
        values = rng.random(width * height * channels)
    image = MapImage(width, height, channels, values)
    mask = generate_uniform_mask(width * height, ratio, seed)
    return image, apply_acquisition(image, mask, 0.0, seed)


def test_anchor_arithmetic():
    geom = PatchGeometry(4, 2, 8, 8, 1)
    np.testing.assert_array_equal(geom.row_anchors, [0, 2, 4])
    np.testing.assert_array_equal(geom.col_anchors, [0, 2, 4])
    assert geom.n_patches == 9


def test_anchor_clamping():
    geom = PatchGeometry(4, 4, 5, 5, 1)
    np.testing.assert_array_equal(geom.row_anchors, [0, 1])
    assert geom.n_patches == 4


def test_geometry_validation():
    with pytest.raises(ValueError):
        PatchGeometry(4, 5, 8, 8, 1)  # stride > patch
    with pytest.raises(ValueError):
        PatchGeometry(9, 1, 8, 8, 1)  # patch > image
    with pytest.raises(ValueError):
        PatchGeometry(4, 0, 8, 8, 1)


def test_cover_counts_match_brute_force():
    _, masked = _masked(11, 7, ratio=1.0, seed=3)
    ps = extract_patches(masked, 4, 3)
    assert np.all(ps.observed)
    # accumulate cover counts through reassembly bookkeeping
    cover = np.zeros((7, 11))
    for r in ps.geometry.row_anchors:
        for c in ps.geometry.col_anchors:
            cover[r : r + 4, c : c + 4] += 1
    # brute force: count patches containing each pixel
    brute = np.zeros((7, 11))
    for y in range(7):
        for x in range(11):
            for r in ps.geometry.row_anchors:
                for c in ps.geometry.col_anchors:
                    if r <= y < r + 4 and c <= x < c + 4:
                        brute[y, x] += 1
    np.testing.assert_array_equal(cover, brute)
    assert brute.min() >= 1


def test_extract_reassemble_identity():
    image, masked = _masked(16, 12, channels=3, ratio=1.0, seed=1)
    ps = extract_patches(masked, 5, 2)
    out = reassemble(ps.patches, ps.geometry, masked, keep_measured=False)
    assert np.max(np.abs(out.data - image.data)) <= 1e-12


def test_overlap_mean():
    # two 1x... patches assigning different values to a shared pixel
    image, masked = _masked(3, 2, ratio=1.0, seed=0)
    ps = extract_patches(masked, 2, 1)
    patches = ps.patches.copy()
    geom = ps.geometry
    # force every patch to constant values 0.2 / 0.4 alternating
    patches[0::2] = 0.2
    patches[1::2] = 0.4
    out = reassemble(patches, geom, masked, keep_measured=False)
    # pixel (0,1) is covered by patches 0 and 1 only
    assert out.data[0, 1, 0] == pytest.approx(0.3)


def test_keep_measured_restores_observed():
    image, masked = _masked(10, 10, ratio=0.4, seed=5)
    ps = extract_patches(masked, 4, 2)
    junk = np.full_like(ps.patches, 0.5)
    out = reassemble(junk, ps.geometry, masked, keep_measured=True)
    on = masked.sampling.indices
    flat_out = out.data.reshape(100, 1)
    flat_in = image.data.reshape(100, 1)
    np.testing.assert_array_equal(flat_out[on], flat_in[on])


def test_observation_flags_shared_across_channels():
    _, masked = _masked(8, 8, channels=3, ratio=0.3, seed=2)
    ps = extract_patches(masked, 4, 2)
    b2 = 16
    flags = ps.observed.reshape(ps.geometry.n_patches, 3, b2)
    assert np.all(flags[:, 0, :] == flags[:, 1, :])
    assert np.all(flags[:, 0, :] == flags[:, 2, :])


def test_observation_flags_value_independent():
    image_a, masked_a = _masked(8, 8, ratio=0.5, seed=9)
    values = np.random.default_rng(99).random(64)
    image_b = MapImage(8, 8, 1, values)
    masked_b = apply_acquisition(image_b, masked_a.sampling, 0.0, 9)
    pa = extract_patches(masked_a, 4, 2)
    pb = extract_patches(masked_b, 4, 2)
    np.testing.assert_array_equal(pa.observed, pb.observed)


def test_extract_rejects_bad_geometry():
    _, masked = _masked(8, 8)
    with pytest.raises(ValueError):
        extract_patches(masked, 9, 1)
    with pytest.raises(ValueError):
        extract_patches(masked, 4, 5)


def test_reassemble_rejects_dim_mismatch():
    _, masked = _masked(8, 8)
    ps = extract_patches(masked, 4, 2)
    with pytest.raises(ValueError):
        reassemble(ps.patches[:, :-1], ps.geometry, masked)
