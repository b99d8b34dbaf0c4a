"""Experiment runner: per-level diameters, slopes, and held-out task scores.

Each task is evaluated at every tree level, not only at the leaves. A query is
routed down ``level`` steps (or to a shallower leaf) and answered from that
cell's training points.
"""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .config import RunConfig
from .covdim import dimension_profiles, format_float
from .errors import InvalidParam
from .synth import PointSet, generate, read_csv
from .trees import PartitionTree, build

PROFILE_COLUMNS = ("rule", "D", "level", "max_diam_sq", "avg_diam_sq", "cells", "dist_splits")
EVAL_COLUMNS = ("task", "rule", "level", "mean", "std", "folds", "D")
SLOPE_COLUMNS = ("rule", "D", "l0", "l1", "slope", "halving_depth")
DIMEST_COLUMNS = ("r", "d_mean", "d_std", "n_mean", "epsilon", "D")


@dataclass(frozen=True)
class LevelStats:
    level: int
    max_diam_sq: float
    avg_diam_sq: float
    cells: int
    min_cell: int
    max_cell: int
    dist_splits: int


@dataclass(frozen=True)
class LevelProfile:
    levels: List[LevelStats]

    @property
    def avg_diam_sq(self) -> np.ndarray:
        return np.array([s.avg_diam_sq for s in self.levels])

    @property
    def max_diam_sq(self) -> np.ndarray:
        return np.array([s.max_diam_sq for s in self.levels])


@dataclass(frozen=True)
class NNResult:
    percentile: float
    ratio: float


def level_profile(tree: PartitionTree) -> LevelProfile:
    """Weighted diameter statistics of the level-l partition for l = 0..height."""
    n = tree.n
    out = []
    for level in range(tree.height + 1):
        nodes = tree.level_nodes(level)
        w = np.array([node.count for node in nodes], dtype=np.float64) / n
        mx = float(np.sum(w * [node.stats.max_diam_sq for node in nodes]))
        av = float(np.sum(w * [node.stats.avg_diam_sq for node in nodes]))
        sizes = [node.count for node in nodes]
        dist = sum(1 for node in nodes if node.depth == level and node.is_distance_split)
        out.append(LevelStats(level, mx, av, len(nodes), min(sizes), max(sizes), dist))
    return LevelProfile(out)


def _avg_series(profile):
    if isinstance(profile, LevelProfile):
        return profile.avg_diam_sq
    return np.asarray(profile, dtype=np.float64)


def fit_slope(profile, window=(8, 13)) -> float:
    """Least-squares slope of ``log2 sqrt(avg_diam_sq)`` against level.

    The window is clipped to the levels the profile has and cut short at the
    first zero diameter. Fewer than two usable levels raises InvalidParam.
    """
    l0, l1 = int(window[0]), int(window[1])
    if l1 <= l0:
        raise InvalidParam("window needs l1 > l0")
    avg = _avg_series(profile)
    levels = np.arange(l0, min(l1, len(avg) - 1) + 1)
    vals = avg[levels] if levels.size else np.empty(0)
    zero = np.nonzero(vals <= 0.0)[0]
    if zero.size:
        levels, vals = levels[: zero[0]], vals[: zero[0]]
    if levels.size < 2:
        raise InvalidParam(f"fewer than two usable levels in window [{l0}, {l1}]")
    y = 0.5 * np.log2(vals)
    x = levels.astype(np.float64)
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))


def halving_depth(profile) -> Optional[int]:
    """First level where the average diameter is at most half its level-0 value."""
    avg = _avg_series(profile)
    hit = np.nonzero(avg <= avg[0] / 4.0)[0]
    return int(hit[0]) if hit.size else None


def quantization_error(tree: PartitionTree, Q, level: int) -> float:
    """Mean squared distance from each query to its routed cell's training centroid."""
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    ids = tree.route_many(Q, level)
    centroids = np.array([tree.nodes[i].mean for i in ids])
    diff = Q - centroids
    return float(np.mean((diff * diff).sum(axis=1)))


def _sq_dists(Q, X):
    d = (Q * Q).sum(axis=1)[:, None] + (X * X).sum(axis=1)[None, :] - 2.0 * (Q @ X.T)
    return np.maximum(d, 0.0)


def nn_eval(tree: PartitionTree, Q, level: int, block: int = 256):
    """Percentile order and distance ratio of the in-cell nearest neighbor, per query.

    Percentile is ``(1 + #train points strictly closer than the found one) / n``;
    the ratio is ``found distance / true NN distance`` (1 when the query
    coincides with a training point).
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    X = tree.points
    n = len(X)
    ids = tree.route_many(Q, level)
    pct = np.empty(len(Q))
    ratio = np.empty(len(Q))
    for start in range(0, len(Q), block):
        sl = slice(start, start + block)
        d2 = _sq_dists(Q[sl], X)
        for row, nid in enumerate(ids[sl]):
            k = start + row
            members = tree.nodes[nid].members
            found = float(d2[row, members].min())
            true = float(d2[row].min())
            pct[k] = (1 + int(np.count_nonzero(d2[row] < found))) / n
            ratio[k] = 1.0 if true == 0.0 else float(np.sqrt(found / true))
    return pct, ratio


def nn_query(tree: PartitionTree, q, level: int) -> NNResult:
    pct, ratio = nn_eval(tree, np.asarray(q, dtype=np.float64).reshape(1, -1), level)
    return NNResult(float(pct[0]), float(ratio[0]))


def regression_eval(tree: PartitionTree, y_train, Q, y_test, level: int) -> float:
    """RMSE of predicting each query's response by its routed cell's mean training response."""
    if y_train is None or y_test is None:
        raise InvalidParam("regression needs responses")
    y_train = np.asarray(y_train, dtype=np.float64)
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    ids = tree.route_many(Q, level)
    cache = {}
    pred = np.empty(len(Q))
    for k, nid in enumerate(ids):
        if nid not in cache:
            cache[nid] = float(y_train[tree.nodes[nid].members].mean())
        pred[k] = cache[nid]
    err = pred - np.asarray(y_test, dtype=np.float64)
    return float(np.sqrt(np.mean(err * err)))


def kfold(n: int, k: int, seed: int):
    """Seeded permutation cut into k contiguous near-equal blocks; fold i tests block i."""
    if k < 2 or n < k:
        raise InvalidParam(f"need k >= 2 and n >= k, got n={n}, k={k}")
    perm = np.random.default_rng(seed).permutation(n)
    blocks = np.array_split(perm, k)
    return [
        (np.sort(np.concatenate(blocks[:i] + blocks[i + 1:])), np.sort(blocks[i]))
        for i in range(k)
    ]


# experiment driver ---------------------------------------------------------


def derive_seed(seed: int, *tags: int) -> int:
    ss = np.random.SeedSequence([int(seed), *[int(t) for t in tags]])
    return int(ss.generate_state(1, np.uint64)[0])


def load_dataset(spec: dict, seed: int) -> PointSet:
    if "path" in spec:
        return read_csv(spec["path"])
    params = dict(spec.get("params", {}))
    ds_seed = params.pop("seed", seed)
    return generate(spec["generator"], ds_seed, **params)


@dataclass
class ExperimentReport:
    config: dict
    profiles: List[dict] = field(default_factory=list)
    slopes: List[dict] = field(default_factory=list)
    evals: List[dict] = field(default_factory=list)
    dimest: List[dict] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {"config": self.config, "profiles": self.profiles, "slopes": self.slopes,
             "eval": self.evals, "dimest": self.dimest},
            sort_keys=True, indent=1, allow_nan=True,
        ) + "\n"


def _profile_unit(args):
    ds_idx, t_idx, X, spec, seed, window = args
    tree = build(X, spec.build_config(derive_seed(seed, 1, ds_idx, t_idx)))
    prof = level_profile(tree)
    try:
        slope = fit_slope(prof, window)
    except InvalidParam:
        slope = float("nan")
    return (ds_idx, t_idx), prof, slope, halving_depth(prof)


def _eval_unit(args):
    ds_idx, t_idx, fold, ps, train, test, spec, seed, tasks = args
    X = ps.points
    tree = build(X[train], spec.build_config(derive_seed(seed, 2, ds_idx, t_idx, fold)))
    Q = X[test]
    scores = {}
    for level in range(tree.height + 1):
        if "quantize" in tasks:
            scores.setdefault("quantization", []).append(quantization_error(tree, Q, level))
        if "nn" in tasks:
            pct, ratio = nn_eval(tree, Q, level)
            scores.setdefault("nn_percentile", []).append(float(pct.mean()))
            scores.setdefault("nn_ratio", []).append(float(ratio.mean()))
        if "regress" in tasks:
            scores.setdefault("regression", []).append(
                regression_eval(tree, ps.responses[train], Q, ps.responses[test], level)
            )
    return (ds_idx, t_idx, fold), scores


def _run_units(fn, units, workers):
    if workers and workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(fn, units))
    else:
        results = [fn(u) for u in units]
    return sorted(results, key=lambda r: r[0])


def run_experiment(config: RunConfig, workers: int = 1) -> ExperimentReport:
    """Run every requested task for every dataset variant and tree spec.

    Results are keyed by (dataset, tree, fold) and merged in key order, so
    the report does not depend on ``workers``.
    """
    report = ExperimentReport(config.to_dict())
    variants = config.dataset_variants()
    datasets = [load_dataset(v, config.seed) for v in variants]
    tasks = set(config.tasks)
    window = tuple(config.slope_window)

    if "dimest" in tasks:
        cov = config.covdim
        for ds_idx, ps in enumerate(datasets):
            profiles = dimension_profiles(
                ps.points, cov.epsilon, num_radii=cov.num_radii,
                center_cap=cov.center_cap, seed=derive_seed(config.seed, 3, ds_idx),
            )
            for prof in profiles:
                for row in prof.rows():
                    report.dimest.append({**row, "D": ps.D})

    if "profile" in tasks:
        units = [
            (ds_idx, t_idx, ps.points, spec, config.seed, window)
            for ds_idx, ps in enumerate(datasets)
            for t_idx, spec in enumerate(config.trees)
        ]
        for (ds_idx, t_idx), prof, slope, half in _run_units(_profile_unit, units, workers):
            name, D = config.trees[t_idx].name, datasets[ds_idx].D
            for s in prof.levels:
                report.profiles.append({
                    "rule": name, "D": D, "level": s.level, "max_diam_sq": s.max_diam_sq,
                    "avg_diam_sq": s.avg_diam_sq, "cells": s.cells, "dist_splits": s.dist_splits,
                    "min_cell": s.min_cell, "max_cell": s.max_cell,
                })
            report.slopes.append({
                "rule": name, "D": D, "l0": window[0], "l1": window[1],
                "slope": slope, "halving_depth": half,
            })

    eval_tasks = tasks & {"quantize", "nn", "regress"}
    if eval_tasks:
        units = []
        for ds_idx, ps in enumerate(datasets):
            if "regress" in eval_tasks and ps.responses is None:
                raise InvalidParam("regress task needs a dataset with responses")
            folds = kfold(ps.n, config.folds, derive_seed(config.seed, 4, ds_idx))
            for t_idx, spec in enumerate(config.trees):
                for f, (train, test) in enumerate(folds):
                    units.append((ds_idx, t_idx, f, ps, train, test, spec, config.seed, eval_tasks))
        results = _run_units(_eval_unit, units, workers)
        grouped = {}
        for (ds_idx, t_idx, f), scores in results:
            grouped.setdefault((ds_idx, t_idx), []).append(scores)
        for (ds_idx, t_idx), fold_scores in sorted(grouped.items()):
            name, D = config.trees[t_idx].name, datasets[ds_idx].D
            for task in ("quantization", "nn_percentile", "nn_ratio", "regression"):
                series = [s[task] for s in fold_scores if task in s]
                if not series:
                    continue
                depth = max(len(s) for s in series)
                if config.max_level is not None:
                    depth = config.max_level + 1
                # a fold whose tree is shallower keeps its leaf value at deeper levels
                mat = np.array([[s[min(lv, len(s) - 1)] for lv in range(depth)] for s in series])
                for lv in range(depth):
                    col = mat[:, lv]
                    report.evals.append({
                        "task": task, "rule": name, "level": lv, "mean": float(col.mean()),
                        "std": float(col.std(ddof=1)) if len(col) > 1 else 0.0,
                        "folds": len(col), "D": D,
                    })
    return report


def _write_rows(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def write_report(report: ExperimentReport, out_dir) -> Path:
    """Write profile.csv / eval.csv / slopes.csv / dimest.csv (as applicable) and report.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = set(report.config["tasks"])
    if "profile" in tasks:
        _write_rows(out / "profile.csv", PROFILE_COLUMNS, report.profiles)
        _write_rows(out / "slopes.csv", SLOPE_COLUMNS, report.slopes)
    if tasks & {"quantize", "nn", "regress"}:
        _write_rows(out / "eval.csv", EVAL_COLUMNS, report.evals)
    if "dimest" in tasks:
        _write_rows(out / "dimest.csv", DIMEST_COLUMNS, report.dimest)
    (out / "report.json").write_text(report.to_json())
    return out
