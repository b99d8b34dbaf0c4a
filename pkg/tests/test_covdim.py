import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spatial_trees.covdim import (
    CSV_COLUMNS,
    cov_dim,
    dimension_profile,
    dimension_profiles,
    local_dim_at,
    radius_grid,
    spectrum_ratio_k,
    write_profiles_csv,
)
from spatial_trees.errors import DegenerateCell, DegenerateData, InvalidParam
from spatial_trees.linalg import Spectrum, point_spectrum
from spatial_trees.synth import affine_cloud, noisy_swissroll, sinusoid_manifold


def test_cov_dim_examples():
    assert cov_dim([4, 1, 1], 0.1) == 3
    assert cov_dim(Spectrum(np.array([1.0, 0.0, 0.0])), 0.5) == 1
    assert cov_dim([0.5, 0.5], 0.1) == 2
    assert cov_dim([0.0, 0.0], 0.1) == 0


def test_cov_dim_bad_epsilon():
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(InvalidParam):
            cov_dim([1.0], eps)


spectra = st.lists(st.floats(0, 1e3, allow_nan=False), min_size=1, max_size=12).filter(lambda v: sum(v) > 1e-9)


@settings(max_examples=200, deadline=None)
@given(spectra, st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_cov_dim_monotone_in_epsilon(lam, e1, e2):
    lo, hi = sorted((e1, e2))
    assert cov_dim(lam, lo) >= cov_dim(lam, hi)


@settings(max_examples=200, deadline=None)
@given(spectra, st.data())
def test_spectrum_ratio_bounded_by_d(lam, data):
    lam = sorted(lam, reverse=True)
    if lam[0] <= 0:
        return
    d = data.draw(st.integers(1, len(lam)))
    k = spectrum_ratio_k(lam, d)
    assert 1.0 <= k <= d * (1 + 1e-12)


def test_spectrum_ratio_examples():
    assert spectrum_ratio_k([4, 1], 2) == pytest.approx(1.25)
    assert spectrum_ratio_k([1, 0, 0], 1) == 1.0
    assert spectrum_ratio_k([1, 1, 1], 3) == 3.0
    with pytest.raises(DegenerateCell):
        spectrum_ratio_k([0.0, 0.0], 1)
    with pytest.raises(InvalidParam):
        spectrum_ratio_k([1.0], 2)


def test_local_dim_examples():
    t = np.linspace(0, 1, 50)
    line = np.c_[t, 2 * t, -t]
    assert local_dim_at(line, line[10], 0.3, 0.1)[0] == 1
    theta = np.linspace(0, 2 * np.pi, 100, endpoint=False)
    circle = np.c_[np.cos(theta), np.sin(theta)]
    assert local_dim_at(circle, circle[0], 2.0, 0.1) == (2, 100)
    d, count = local_dim_at(circle, circle[0], 1e-3, 0.1)
    assert d is None and count == 1


def test_local_dim_full_ball_matches_global(rng):
    X = rng.standard_normal((80, 4)) * [3, 1, 0.5, 0.1]
    d, count = local_dim_at(X, X[0], 1e6, 0.05)
    assert count == 80
    assert d == cov_dim(point_spectrum(X), 0.05)


def test_radius_grid():
    np.testing.assert_allclose(radius_grid(2.0, 4), [0.5, 1.0, 1.5, 2.0])


def test_profile_on_flat_plane():
    prof = dimension_profile(affine_cloud(600, 10, 2, seed=1).points, num_radii=10, epsilon=0.1)
    assert np.all(np.diff(prof.radii) > 0)
    mid = prof.d_mean[3:7]
    np.testing.assert_array_equal(mid, 2.0)
    assert prof.n_mean[-1] == 600


def test_profile_never_exceeds_subspace_rank():
    for d in (1, 3):
        X = affine_cloud(500, 8, d, seed=d).points
        for eps in (0.1, 0.01, 1e-6):
            prof = dimension_profile(X, num_radii=8, epsilon=eps)
            assert np.nanmax(prof.d_mean) <= d


def test_profile_full_rank_at_tiny_epsilon():
    prof = dimension_profile(affine_cloud(500, 8, 3, seed=0).points, num_radii=8, epsilon=1e-9)
    assert prof.d_mean[-1] == 3


def test_profiles_share_radii_and_counts():
    X = sinusoid_manifold(800, 10, seed=0).points
    a, b = dimension_profiles(X, (0.1, 0.01), num_radii=6, center_cap=200, seed=3)
    np.testing.assert_array_equal(a.radii, b.radii)
    np.testing.assert_array_equal(a.n_mean, b.n_mean)
    assert np.all(a.d_mean <= b.d_mean)


def test_sinusoid_low_dimension_at_small_radius():
    prof = dimension_profile(sinusoid_manifold(2000, 10, seed=0).points, num_radii=10, epsilon=0.1, center_cap=300)
    assert prof.d_mean[0] < 3


def test_noisy_roll_rises_at_both_ends():
    prof = dimension_profile(noisy_swissroll(4000, 0.5, seed=0).points, num_radii=40, epsilon=0.1, center_cap=300)
    valid = prof.n_mean >= 20
    d = prof.d_mean[valid]
    assert d.min() < 2.5
    assert d[-1] > 2.5


def test_profile_matches_direct_ball_computation(rng):
    X = rng.standard_normal((120, 5)) * [2, 1, 1, 0.3, 0.1]
    prof = dimension_profile(X, num_radii=5, epsilon=0.05, center_cap=None)
    for ri, r in enumerate(prof.radii):
        dims = [local_dim_at(X, x, r, 0.05)[0] for x in X]
        dims = [d for d in dims if d is not None]
        assert prof.d_mean[ri] == pytest.approx(np.mean(dims))


def test_center_cap_is_seeded():
    X = sinusoid_manifold(500, 10, seed=0).points
    a = dimension_profile(X, num_radii=5, center_cap=50, seed=1)
    b = dimension_profile(X, num_radii=5, center_cap=50, seed=1)
    np.testing.assert_array_equal(a.d_mean, b.d_mean)


def test_degenerate_inputs():
    with pytest.raises(DegenerateData):
        dimension_profile(np.ones((1, 3)))
    with pytest.raises(DegenerateData):
        dimension_profile(np.ones((5, 3)))


def test_write_csv(tmp_path):
    X = affine_cloud(200, 5, 2, seed=0).points
    profiles = dimension_profiles(X, (0.1, 0.01), num_radii=4)
    path = tmp_path / "p.csv"
    write_profiles_csv(profiles, path)
    rows = list(csv.DictReader(open(path)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 8
    assert {r["epsilon"] for r in rows} == {"0.1", "0.01"}
