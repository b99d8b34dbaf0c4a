import csv
import json

import numpy as np
import pytest

from spatial_trees.config import parse_config
from spatial_trees.diameters import avg_diam_sq, max_diam_sq
from spatial_trees.errors import InvalidParam
from spatial_trees.harness import (
    fit_slope,
    halving_depth,
    kfold,
    level_profile,
    nn_eval,
    nn_query,
    quantization_error,
    regression_eval,
    run_experiment,
    write_report,
)
from spatial_trees.synth import sinusoid_manifold
from spatial_trees.trees import RULES, BuildConfig, SplitRule, build

LINE = np.arange(4.0)[:, None]


@pytest.fixture(scope="module")
def line_tree():
    return build(LINE, BuildConfig(SplitRule("kd"), min_size=1))


@pytest.fixture(scope="module")
def sinusoid():
    return sinusoid_manifold(1000, 10, seed=2)


def test_level_profile_line(line_tree):
    prof = level_profile(line_tree)
    np.testing.assert_allclose(prof.avg_diam_sq, [2.5, 0.5, 0.0])
    np.testing.assert_allclose(prof.max_diam_sq, [9.0, 1.0, 0.0])
    assert [s.cells for s in prof.levels] == [1, 2, 4]
    assert prof.levels[2].min_cell == prof.levels[2].max_cell == 1


def test_level_profile_root_matches_data(sinusoid):
    tree = build(sinusoid.points, BuildConfig(SplitRule("pd"), min_size=10))
    s0 = level_profile(tree).levels[0]
    assert s0.max_diam_sq == pytest.approx(max_diam_sq(sinusoid.points))
    assert s0.avg_diam_sq == pytest.approx(avg_diam_sq(sinusoid.points))


def test_fit_slope_examples():
    halving = (2.0 ** -np.arange(12)) ** 2
    assert fit_slope(halving, (2, 8)) == pytest.approx(-1.0)
    assert fit_slope(np.full(10, 3.0), (0, 9)) == pytest.approx(0.0)
    assert fit_slope(np.array([8.0, 4.0, 2.0, 1.0]) ** 2, (0, 3)) == -1.0


def test_fit_slope_window_handling():
    avg = np.array([16.0, 4.0, 1.0, 0.0, 0.0])
    assert fit_slope(avg, (0, 4)) == pytest.approx(-1.0)
    assert fit_slope(avg, (1, 20)) == pytest.approx(-1.0)
    with pytest.raises(InvalidParam):
        fit_slope(avg, (2, 4))
    with pytest.raises(InvalidParam):
        fit_slope(avg, (3, 3))


def test_halving_depth():
    assert halving_depth(np.array([4.0, 2.0, 1.0, 0.5])) == 2
    assert halving_depth(np.array([4.0, 3.9])) is None


def test_quantization_examples(line_tree):
    assert quantization_error(line_tree, LINE, 0) == pytest.approx(1.25)
    assert quantization_error(line_tree, LINE, 1) == pytest.approx(0.25)
    assert quantization_error(line_tree, [[1.5]], 0) == 0.0
    assert quantization_error(line_tree, LINE, 99) == 0.0


def test_nn_examples(line_tree):
    r = nn_query(line_tree, 1.4, 1)
    assert (r.percentile, r.ratio) == (0.25, 1.0)
    r = nn_query(line_tree, 2.0, None)
    assert (r.percentile, r.ratio) == (0.25, 1.0)
    r = nn_query(line_tree, 1.6, 1)
    assert (r.percentile, r.ratio) == (0.25, 1.0)


def test_nn_miss_in_wrong_cell():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 10.0], [3.0, 10.0]])
    tree = build(X, BuildConfig(SplitRule("kd"), min_size=1))
    # split is on y at 5; the query sits just above it, nearer the bottom pair
    q = [0.0, 5.1]
    assert tree.nodes[tree.route(q, 1)].members.tolist() == [2, 3]
    r = nn_query(tree, q, 1)
    assert r.percentile == 0.75
    assert r.ratio == pytest.approx(np.hypot(2.0, 4.9) / 5.1)


def test_nn_level_zero_is_exact(sinusoid):
    tree = build(sinusoid.points, BuildConfig(SplitRule("rp"), min_size=10))
    Q = np.random.default_rng(0).standard_normal((30, 10)) * 0.4
    pct, ratio = nn_eval(tree, Q, 0)
    np.testing.assert_array_equal(ratio, 1.0)
    np.testing.assert_allclose(pct, 1 / tree.n)
    pct, ratio = nn_eval(tree, Q, tree.height)
    assert np.all(ratio >= 1.0) and np.all((pct > 0) & (pct <= 1))


def test_regression_examples(sinusoid):
    X, y = sinusoid.points, sinusoid.responses
    train, test = np.arange(800), np.arange(800, 1000)
    tree = build(X[train], BuildConfig(SplitRule("kd"), min_size=5))
    base = regression_eval(tree, y[train], X[test], y[test], 0)
    assert base == pytest.approx(np.sqrt(np.mean((y[test] - y[train].mean()) ** 2)))
    deep = regression_eval(tree, y[train], X[test], y[test], tree.height)
    assert deep < 0.25 * base
    for lv in range(tree.height + 1):
        assert regression_eval(tree, np.ones(800), X[test], np.ones(200), lv) == 0.0
    with pytest.raises(InvalidParam):
        regression_eval(tree, None, X[test], y[test], 0)


@pytest.mark.parametrize("rule", RULES)
def test_training_quantization_non_increasing(sinusoid, rule):
    tree = build(sinusoid.points, BuildConfig(SplitRule(rule), min_size=10, seed=1))
    errs = [quantization_error(tree, sinusoid.points, lv) for lv in range(tree.height + 2)]
    assert np.all(np.diff(errs) <= 1e-12 * errs[0])


def test_kfold():
    folds = kfold(10, 10, 0)
    assert all(len(te) == 1 for _, te in folds)
    folds = kfold(23, 10, 4)
    assert [len(te) for _, te in folds] == [3, 3, 3, 2, 2, 2, 2, 2, 2, 2]
    tests = np.concatenate([te for _, te in folds])
    assert np.array_equal(np.sort(tests), np.arange(23))
    for tr, te in folds:
        assert np.intersect1d(tr, te).size == 0 and len(tr) + len(te) == 23
    with pytest.raises(InvalidParam):
        kfold(5, 10, 0)
    with pytest.raises(InvalidParam):
        kfold(5, 1, 0)


def _config(**over):
    raw = {
        "dataset": {"generator": "sinusoid", "params": {"n": 300, "D": 10}},
        "trees": [{"rule": "kd", "min_size": 10}, {"rule": "2m", "min_size": 10}],
        "tasks": ["profile", "quantize", "nn", "regress"],
        "folds": 3,
        "seed": 5,
        "slope_window": [2, 4],
    }
    raw.update(over)
    return parse_config(raw)


def test_run_experiment_outputs(tmp_path):
    rep = run_experiment(_config())
    out = write_report(rep, tmp_path)
    prof = list(csv.DictReader(open(out / "profile.csv")))
    assert list(prof[0]) == ["rule", "D", "level", "max_diam_sq", "avg_diam_sq", "cells", "dist_splits"]
    X = sinusoid_manifold(300, 10, seed=5).points
    level0 = [r for r in prof if r["level"] == "0"]
    assert float(level0[0]["avg_diam_sq"]) == pytest.approx(avg_diam_sq(X))
    ev = list(csv.DictReader(open(out / "eval.csv")))
    assert {r["task"] for r in ev} == {"quantization", "nn_percentile", "nn_ratio", "regression"}
    assert all(r["folds"] == "3" for r in ev)
    nn0 = [r for r in ev if r["task"] == "nn_ratio" and r["level"] == "0"]
    assert all(float(r["mean"]) == 1.0 for r in nn0)
    slopes = list(csv.DictReader(open(out / "slopes.csv")))
    assert len(slopes) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["seed"] == 5


def test_run_experiment_profile_only():
    rep = run_experiment(_config(tasks=["profile"], trees=["kd"]))
    assert rep.profiles and not rep.evals and not rep.dimest


def test_run_experiment_deterministic_across_workers(tmp_path):
    a = write_report(run_experiment(_config(), workers=1), tmp_path / "a")
    b = write_report(run_experiment(_config(), workers=2), tmp_path / "b")
    for name in ("profile.csv", "eval.csv", "slopes.csv", "report.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_report_config_round_trip(tmp_path):
    a = write_report(run_experiment(_config()), tmp_path / "a")
    conf = parse_config(json.loads((a / "report.json").read_text()))
    b = write_report(run_experiment(conf), tmp_path / "b")
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_dimest_task_and_sweep(tmp_path):
    conf = _config(
        dataset={"generator": "affine", "params": {"n": 200, "D": [5, 8], "d": 2}},
        trees=[], tasks=["dimest"], covdim={"num_radii": 4, "epsilon": [0.1]},
    )
    out = write_report(run_experiment(conf), tmp_path)
    rows = list(csv.DictReader(open(out / "dimest.csv")))
    assert len(rows) == 8 and {r["D"] for r in rows} == {"5", "8"}


def test_regress_needs_responses():
    conf = _config(dataset={"generator": "affine", "params": {"n": 100}}, tasks=["regress"])
    with pytest.raises(InvalidParam):
        run_experiment(conf)
