import json

import numpy as np
import pytest

from spatial_trees.errors import InvalidParam
from spatial_trees.synth import (
    PointSet,
    affine_cloud,
    generate,
    noisy_swissroll,
    read_csv,
    sinusoid_manifold,
    write_csv,
)


def test_sinusoid_unit_norm_and_shape():
    ps = sinusoid_manifold(1000, 30, seed=7)
    assert ps.points.shape == (1000, 30)
    np.testing.assert_allclose(np.linalg.norm(ps.points, axis=1), 1.0, atol=1e-12)
    assert ps.responses.min() >= 0 and ps.responses.max() <= 2 * np.pi


def test_sinusoid_map_at_zero():
    ps = sinusoid_manifold(2000, 6, seed=0)
    t = ps.responses
    k = np.arange(1, 4)
    expect = np.sqrt(2 / 6) * np.column_stack([np.sin(np.outer(t, k)), np.cos(np.outer(t, k))])
    expect = expect[:, [0, 3, 1, 4, 2, 5]]
    np.testing.assert_allclose(ps.points, expect, atol=1e-12)


def test_sinusoid_defaults():
    ps = sinusoid_manifold()
    assert ps.n == 20000 and ps.D == 10


@pytest.mark.parametrize("D", [9, 0, -2])
def test_sinusoid_odd_dimension(D):
    with pytest.raises(InvalidParam):
        sinusoid_manifold(10, D)


def test_swissroll_noiseless_surface():
    ps = noisy_swissroll(500, 0.0, seed=1)
    x, h, z = ps.points.T
    t = ps.responses
    np.testing.assert_allclose(x, t * np.cos(t), atol=1e-12)
    np.testing.assert_allclose(z, t * np.sin(t), atol=1e-12)
    assert h.min() >= 0 and h.max() <= 20
    assert t.min() >= 1.5 * np.pi and t.max() <= 4.5 * np.pi


def test_swissroll_single_point():
    assert noisy_swissroll(1, 0.5, seed=0).n == 1


def test_affine_rank():
    X = affine_cloud(300, 10, 3, seed=2).points
    s = np.linalg.svd(X, compute_uv=False)
    assert s[2] > 1e-6 and s[3] < 1e-10
    assert np.linalg.matrix_rank(affine_cloud(50, 4, 4, seed=0).points) == 4


def test_affine_bad_d():
    with pytest.raises(InvalidParam):
        affine_cloud(10, 3, 4)


def test_determinism():
    a = generate("sinusoid", 5, n=100, D=10)
    b = generate("sinusoid", 5, n=100, D=10)
    np.testing.assert_array_equal(a.points, b.points)
    c = generate("sinusoid", 6, n=100, D=10)
    assert not np.array_equal(a.points, c.points)


def test_generate_unknown():
    with pytest.raises(InvalidParam):
        generate("teapot", 0)
    with pytest.raises(InvalidParam):
        generate("sinusoid", 0, bogus=1)


def test_pointset_validation():
    with pytest.raises(InvalidParam):
        PointSet(np.array([[np.nan, 1.0]]))
    with pytest.raises(InvalidParam):
        PointSet(np.ones((3, 2)), responses=np.ones(2))
    ps = PointSet(np.ones((3, 2)))
    assert not ps.points.flags.writeable


def test_csv_round_trip(tmp_path):
    ps = sinusoid_manifold(50, 4, seed=3)
    path = write_csv(ps, tmp_path / "s.csv")
    first = path.read_bytes()
    assert first.splitlines()[0] == b"x0,x1,x2,x3,y"
    assert b"\r" not in first
    back = read_csv(path)
    np.testing.assert_array_equal(back.points, ps.points)
    np.testing.assert_array_equal(back.responses, ps.responses)
    meta = json.loads((tmp_path / "s.csv.json").read_text())
    assert meta == {"generator": "sinusoid", "seed": 3, "params": {"n": 50, "D": 4}}
    write_csv(ps, path)
    assert path.read_bytes() == first


def test_csv_without_responses(tmp_path):
    ps = affine_cloud(20, 3, 2, seed=0)
    back = read_csv(write_csv(ps, tmp_path / "a.csv"))
    assert back.responses is None
    np.testing.assert_array_equal(back.points, ps.points)


def test_read_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("")
    with pytest.raises(InvalidParam):
        read_csv(p)
    p.write_text("x0,x1\n1,2\n3\n")
    with pytest.raises(InvalidParam):
        read_csv(p)
