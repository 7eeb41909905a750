import numpy as np
import pytest

from ebsd_subsample.phantom import PhantomSpec, _voronoi_labels, generate_phantom


def _spec(**kw):
    base = dict(width=32, height=32, n_grains=5, seed=1)
    base.update(kw)
    return PhantomSpec(**base)


def test_single_grain_constant():
    bc, ipf, labels = generate_phantom(_spec(n_grains=1))
    assert np.all(labels == 0)
    assert np.unique(bc.data).size == 1
    assert np.unique(ipf.data.reshape(-1, 3), axis=0).shape[0] == 1


def test_two_grain_bisector_matches_brute_force():
    spec = _spec(n_grains=2, width=16, height=16)
    seeds = np.array([[0, 0], [15, 15]])
    labels = _voronoi_labels(spec, seeds)
    for y in range(16):
        for x in range(16):
            d = [(x - sx) ** 2 + (y - sy) ** 2 for sx, sy in seeds]
            expected = 0 if d[0] <= d[1] else 1
            assert labels[y, x] == expected


def test_determinism():
    a = generate_phantom(_spec())
    b = generate_phantom(_spec())
    np.testing.assert_array_equal(a[0].data, b[0].data)
    np.testing.assert_array_equal(a[1].data, b[1].data)
    np.testing.assert_array_equal(a[2], b[2])


def test_labels_partition_every_grain_nonempty():
    _, _, labels = generate_phantom(_spec(n_grains=12))
    present = np.unique(labels)
    np.testing.assert_array_equal(present, np.arange(12))


def test_band_contrast_respects_ranges():
    spec = _spec(n_grains=8)
    bc, _, _ = generate_phantom(spec)
    assert bc.data.min() >= spec.bc_boundary_level - 1e-12
    assert bc.data.max() <= spec.bc_grain_high + 1e-12


def test_band_contrast_depressed_at_boundaries():
    spec = _spec(n_grains=6, width=64, height=64)
    bc, _, labels = generate_phantom(spec)
    edge = labels[:, :-1] != labels[:, 1:]
    edge_vals = bc.data[:, :-1, 0][edge]
    interior_mean = bc.data.mean()
    assert edge_vals.mean() < interior_mean


def test_ipf_constant_within_grains():
    _, ipf, labels = generate_phantom(_spec(n_grains=7))
    for g in range(7):
        region = ipf.data[labels == g]
        assert np.unique(region, axis=0).shape[0] == 1


def test_adjacent_grain_colors_distinct():
    _, ipf, labels = generate_phantom(_spec(n_grains=10, width=48, height=48))
    colors = {}
    for g in range(10):
        colors[g] = ipf.data[labels == g][0]
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        diff = a != b
        for u, v in zip(a[diff].ravel(), b[diff].ravel()):
            assert np.max(np.abs(colors[u] - colors[v])) >= 0.1


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        _spec(n_grains=0)
    with pytest.raises(ValueError):
        _spec(n_grains=2000, width=8, height=8)
    with pytest.raises(ValueError):
        _spec(bc_boundary_level=0.9)
