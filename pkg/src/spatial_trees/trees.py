"""Binary space partition trees with five projection split rules.

Every tree follows the same template: a cell with at most ``min_size`` points
(or at ``max_depth``) is a leaf, otherwise it is bisected and both halves are
built recursively. The rules differ only in how they pick the cut:

``dyadic``
    cycle through coordinates, cut at the midpoint of the cell's box
``kd``
    coordinate of largest spread, cut at the median
``rp``
    best of a bag of random directions (by drop in average squared
    diameter), cut at the median
``pd``
    principal eigenvector of the cell covariance, cut at the median
``2m``
    2-means (Lloyd with restarts), cut halfway between the two centroids

For ``rp``, ``pd`` and ``2m`` a cell whose squared max diameter is at least
``c`` times its average squared diameter is instead split by distance from
its mean, which peels off outliers.

Median cuts are rank based: the ``ceil(m/2)`` smallest projections go left,
ties broken by point index, so every median split is balanced.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .diameters import CellView, DiameterStats, diameter_stats
from .errors import DegenerateCell, InvalidParam
from .linalg import sample_sphere, top_direction

RULES = ("dyadic", "kd", "rp", "pd", "2m")
_ALIASES = {"pca": "pd", "2means": "2m", "twomeans": "2m", "kdtree": "kd", "random": "rp"}
OUTLIER_RULES = ("rp", "pd", "2m")


@dataclass(frozen=True)
class SplitRule:
    name: str
    bag_size: int = 20
    restarts: int = 5
    max_iters: int = 100

    def __post_init__(self):
        name = _ALIASES.get(str(self.name).lower(), str(self.name).lower())
        if name not in RULES:
            raise InvalidParam(f"unknown split rule {self.name!r}; choose from {RULES}")
        object.__setattr__(self, "name", name)
        for attr in ("bag_size", "restarts", "max_iters"):
            if int(getattr(self, attr)) < 1:
                raise InvalidParam(f"{attr} must be >= 1")


@dataclass(frozen=True)
class BuildConfig:
    rule: SplitRule = field(default_factory=lambda: SplitRule("kd"))
    min_size: int = 10
    max_depth: int = 64
    c: float = 10.0
    enable_distance_split: bool = True
    seed: int = 0
    #: dyadic only: when a midpoint cut leaves one side empty, halve the box
    #: toward the occupied side and try the next coordinate instead of stopping
    dyadic_skip_empty: bool = True

    def __post_init__(self):
        if isinstance(self.rule, str):
            object.__setattr__(self, "rule", SplitRule(self.rule))
        if self.min_size < 1:
            raise InvalidParam("min_size must be >= 1")
        if self.max_depth < 0:
            raise InvalidParam("max_depth must be >= 0")
        if not self.c > 4:
            raise InvalidParam("c must exceed 4 for the distance split to shrink diameters")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidParam("seed must be a 64-bit unsigned integer")


def project(X, v):
    """Row-wise ``x . v``.

    Build and routing both go through here so a training point always lands
    on the same side of a stored threshold.
    """
    return (X * v).sum(axis=1)


def distance_to(X, center):
    diff = X - center
    return np.sqrt((diff * diff).sum(axis=1))


@dataclass(frozen=True)
class ProjectionSplit:
    """Left side is ``{x : x . direction <= threshold}``."""

    direction: np.ndarray
    threshold: float
    axis: Optional[int] = None

    def goes_left(self, Q):
        vals = Q[:, self.axis] if self.axis is not None else project(Q, self.direction)
        return vals <= self.threshold


@dataclass(frozen=True)
class DistanceSplit:
    """Left side is the closed ball ``{x : ||x - center|| <= radius}``."""

    center: np.ndarray
    radius: float

    def goes_left(self, Q):
        return distance_to(Q, self.center) <= self.radius


@dataclass
class TreeNode:
    id: int
    parent: int
    depth: int
    members: np.ndarray
    stats: DiameterStats
    mean: np.ndarray
    #: heap-style path code (root 1, children 2p and 2p+1); seeds this node's RNG
    path: int = 1
    #: dyadic only: position in the coordinate cycle this node cuts first
    cycle: int = 0
    split: Optional[object] = None
    children: List[int] = field(default_factory=list)
    box: Optional[tuple] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def is_distance_split(self) -> bool:
        return isinstance(self.split, DistanceSplit)

    @property
    def count(self) -> int:
        return int(self.members.size)


def _rank_split(values, members):
    """Balanced split: the ceil(m/2) smallest values go left, ties by index order."""
    m = values.size
    order = np.argsort(values, kind="stable")
    h = (m + 1) // 2
    lo, hi = float(values[order[h - 1]]), float(values[order[h]])
    t = lo + (hi - lo) / 2.0
    if not lo <= t < hi:
        t = lo
    return np.sort(members[order[:h]]), np.sort(members[order[h:]]), t


def split_dyadic(X, members, depth, box, perm=None):
    """Cut at the box midpoint of coordinate ``perm[depth mod D]``.

    Returns None (make a leaf) when either side would be empty.
    """
    D = X.shape[1]
    j = int(perm[depth % D]) if perm is not None else depth % D
    lo, hi = box
    t = float(lo[j] + (hi[j] - lo[j]) / 2.0)
    vals = X[members, j]
    mask = vals <= t
    if mask.all() or not mask.any():
        return None
    e = np.zeros(D)
    e[j] = 1.0
    return members[mask], members[~mask], ProjectionSplit(e, t, axis=j)


def split_kd(X, members):
    Xa = X[members]
    spread = Xa.max(axis=0) - Xa.min(axis=0)
    j = int(np.argmax(spread))
    if spread[j] <= 0:
        return None
    left, right, t = _rank_split(Xa[:, j], members)
    e = np.zeros(X.shape[1])
    e[j] = 1.0
    return left, right, ProjectionSplit(e, t, axis=j)


def _median_decrease(Xa, vals):
    """Drop in average squared diameter for the rank-median split of ``vals``."""
    m = vals.size
    order = np.argsort(vals, kind="stable")
    h = (m + 1) // 2
    s1 = Xa[order[:h]].sum(axis=0)
    s2 = Xa.sum(axis=0) - s1
    d = s1 / h - s2 / (m - h)
    return 2.0 * (h / m) * ((m - h) / m) * float(d @ d)


def split_rp(X, members, rng, bag_size=20):
    """Median split along the best of ``bag_size`` random unit directions.

    Directions are scored by the drop in average squared diameter; the first
    drawn wins ties.
    """
    Xa = X[members]
    dirs = sample_sphere(X.shape[1], rng, size=bag_size)
    best, best_v = 0.0, None
    for v in dirs:
        score = _median_decrease(Xa, project(Xa, v))
        if score > best:
            best, best_v = score, v
    if best_v is None:
        return None
    left, right, t = _rank_split(project(Xa, best_v), members)
    return left, right, ProjectionSplit(best_v, t)


def split_pd(X, members):
    Xa = X[members]
    try:
        v = top_direction(Xa)
    except DegenerateCell:
        return None
    left, right, t = _rank_split(project(Xa, v), members)
    return left, right, ProjectionSplit(v, t)


def _lloyd(Xa, c1, c2, max_iters):
    labels = None
    u = t = None
    for _ in range(max_iters):
        diff = c2 - c1
        norm = np.sqrt(diff @ diff)
        if norm == 0.0:
            return None
        u = diff / norm
        t = float(u @ (c1 + c2)) / 2.0
        new = project(Xa, u) <= t
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        if labels.all() or not labels.any():
            return None
        c1 = Xa[labels].mean(axis=0)
        c2 = Xa[~labels].mean(axis=0)
    return labels, u, t


def two_means_cost(Xa, labels) -> float:
    """Within-cluster sum of squares, i.e. ``(m/2)`` times the children's average squared diameter."""
    cost = 0.0
    for part in (Xa[labels], Xa[~labels]):
        dev = part - part.mean(axis=0)
        cost += float((dev * dev).sum())
    return cost


def split_2m(X, members, rng, restarts=5, max_iters=100):
    """Split by the best of ``restarts`` Lloyd runs of 2-means.

    Each run starts from two distinct random data points. The cut is the
    hyperplane halfway between the final centroids (left = closer to the
    first centroid, ties left), so cluster assignment and routing agree.
    """
    Xa = X[members]
    m = len(Xa)
    best = None
    best_cost = np.inf
    for _ in range(restarts):
        i = int(rng.integers(m))
        others = np.nonzero(np.any(Xa != Xa[i], axis=1))[0]
        if others.size == 0:
            return None
        j = int(others[rng.integers(others.size)])
        out = _lloyd(Xa, Xa[i].copy(), Xa[j].copy(), max_iters)
        if out is None:
            continue
        labels, u, t = out
        cost = two_means_cost(Xa, labels)
        if cost < best_cost:
            best_cost, best = cost, (labels, u, t)
    if best is None:
        return None
    labels, u, t = best
    return members[labels], members[~labels], ProjectionSplit(u, t)


def split_distance(X, members):
    """Rank-median split on distance from the cell mean (outlier removal)."""
    Xa = X[members]
    center = Xa.mean(axis=0)
    left, right, r = _rank_split(distance_to(Xa, center), members)
    return left, right, DistanceSplit(center, r)


def _dyadic_with_skips(X, node, skip_empty, max_skips=None):
    """Dyadic cut at ``node.cycle``; optionally skip over empty halvings.

    Each skipped halving shrinks ``node.box`` to the occupied half and moves
    to the next coordinate, so the box still shrinks once per cycle step.
    """
    D = X.shape[1]
    max_skips = 64 * D if max_skips is None else max_skips
    box = node.box
    for _ in range(max_skips + 1):
        out = split_dyadic(X, node.members, node.cycle, box)
        if out is not None or not skip_empty:
            node.box = box
            return out
        j = node.cycle % D
        lo, hi = box[0].copy(), box[1].copy()
        t = lo[j] + (hi[j] - lo[j]) / 2.0
        if np.all(X[node.members, j] <= t):
            hi[j] = t
        else:
            lo[j] = t
        box = (lo, hi)
        node.cycle += 1
    node.box = box
    return None


def node_rng(seed: int, path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(path)]))


class PartitionTree:
    """A built tree: nodes in preorder (root is ``nodes[0]``) over a fixed point array."""

    def __init__(self, points, config: BuildConfig, nodes: List[TreeNode]):
        self.points = points
        self.config = config
        self.nodes = nodes

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    @property
    def height(self) -> int:
        return max(node.depth for node in self.nodes)

    @property
    def n(self) -> int:
        return self.root.count

    def leaves(self) -> List[TreeNode]:
        return [node for node in self.nodes if node.is_leaf]

    def level_nodes(self, level: int) -> List[TreeNode]:
        """Nodes at depth ``level`` plus leaves that stop above it."""
        return [
            node for node in self.nodes
            if node.depth == level or (node.is_leaf and node.depth < level)
        ]

    def level_partition(self, level: int) -> List[CellView]:
        return [CellView(self.points, node.members) for node in self.level_nodes(level)]

    def route(self, q, level: Optional[int] = None) -> int:
        """Id of the node reached by walking ``q`` down ``level`` steps (None: to a leaf)."""
        Q = np.asarray(q, dtype=np.float64).reshape(1, -1)
        return int(self.route_many(Q, level)[0])

    def route_many(self, Q, level: Optional[int] = None) -> np.ndarray:
        Q = np.asarray(Q, dtype=np.float64)
        if Q.ndim == 1:
            Q = Q[:, None] if self.points.shape[1] == 1 else Q[None, :]
        out = np.empty(len(Q), dtype=np.intp)
        stack = [(0, np.arange(len(Q)))]
        while stack:
            nid, idx = stack.pop()
            node = self.nodes[nid]
            if node.is_leaf or (level is not None and node.depth >= level) or idx.size == 0:
                out[idx] = nid
                continue
            left = node.split.goes_left(Q[idx])
            stack.append((node.children[0], idx[left]))
            stack.append((node.children[1], idx[~left]))
        return out

    # serialization -------------------------------------------------------

    def to_jsonl(self, path) -> Path:
        """One JSON object per node, in id order."""
        path = Path(path)
        with open(path, "w") as fh:
            for rec in self.records():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        return path

    def records(self):
        for node in self.nodes:
            rec = {
                "id": node.id,
                "parent": node.parent,
                "depth": node.depth,
                "member_count": node.count,
            }
            sp = node.split
            if sp is None:
                rec["kind"] = "leaf"
            elif isinstance(sp, DistanceSplit):
                rec.update(kind="distance", center=sp.center.tolist(), radius=sp.radius)
            else:
                rec.update(kind="projection", threshold=sp.threshold)
                if sp.axis is not None:
                    rec["axis"] = sp.axis
                else:
                    rec["direction"] = sp.direction.tolist()
            yield rec

    @classmethod
    def from_jsonl(cls, path, points=None, config: Optional[BuildConfig] = None) -> "PartitionTree":
        """Reload a tree written by :meth:`to_jsonl`.

        With ``points`` given, member sets and statistics are recomputed by
        routing the points; points tied exactly at a median threshold may
        land on a different side than during the original build.
        """
        with open(path) as fh:
            recs = [json.loads(line) for line in fh if line.strip()]
        recs.sort(key=lambda r: r["id"])
        D = None if points is None else np.asarray(points).shape[1]
        nodes = []
        for rec in recs:
            kind = rec["kind"]
            split = None
            if kind == "distance":
                split = DistanceSplit(np.asarray(rec["center"], dtype=np.float64), float(rec["radius"]))
                D = D or len(rec["center"])
            elif kind == "projection":
                if "axis" in rec:
                    axis = int(rec["axis"])
                    split = ProjectionSplit(None, float(rec["threshold"]), axis=axis)
                else:
                    v = np.asarray(rec["direction"], dtype=np.float64)
                    split = ProjectionSplit(v, float(rec["threshold"]))
                    D = D or len(v)
            elif kind != "leaf":
                raise InvalidParam(f"unknown node kind {kind!r}")
            node = TreeNode(
                id=int(rec["id"]), parent=int(rec["parent"]), depth=int(rec["depth"]),
                members=np.empty(0, dtype=np.intp), stats=DiameterStats(0.0, 0.0, int(rec["member_count"])),
                mean=np.empty(0), split=split,
            )
            if node.id != len(nodes):
                raise InvalidParam("node ids must be 0..N-1")
            nodes.append(node)
            if node.parent >= 0:
                nodes[node.parent].children.append(node.id)
        for node in nodes:
            sp = node.split
            if isinstance(sp, ProjectionSplit) and sp.axis is not None and D is not None:
                e = np.zeros(D)
                e[sp.axis] = 1.0
                node.split = ProjectionSplit(e, sp.threshold, axis=sp.axis)
        tree = cls(points, config, nodes)
        if points is not None:
            X = np.asarray(points, dtype=np.float64)
            stack = [(0, np.arange(len(X)))]
            while stack:
                nid, idx = stack.pop()
                node = nodes[nid]
                node.members = idx
                if idx.size:
                    node.stats = diameter_stats(X[idx])
                    node.mean = X[idx].mean(axis=0)
                if not node.is_leaf:
                    left = node.split.goes_left(X[idx])
                    stack.append((node.children[0], idx[left]))
                    stack.append((node.children[1], idx[~left]))
        return tree


def build(X, config: Optional[BuildConfig] = None) -> PartitionTree:
    """Build a partition tree over the rows of ``X`` (array or PointSet)."""
    config = config or BuildConfig()
    X = np.ascontiguousarray(getattr(X, "points", X), dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, D = X.shape
    if n < 1:
        raise InvalidParam("cannot build a tree on zero points")
    rule = config.rule
    use_box = rule.name == "dyadic"
    nodes: List[TreeNode] = []
    root_box = (X.min(axis=0), X.max(axis=0)) if use_box else None
    stack = [(np.arange(n), -1, 0, 1, root_box, 0)]
    while stack:
        members, parent, depth, path, box, cycle = stack.pop()
        Xa = X[members]
        node = TreeNode(
            id=len(nodes), parent=parent, depth=depth, members=members,
            stats=diameter_stats(Xa), mean=Xa.mean(axis=0), path=path, box=box, cycle=cycle,
        )
        nodes.append(node)
        if parent >= 0:
            nodes[parent].children.append(node.id)

        out = _choose_split(X, node, config)
        if out is None:
            continue
        left, right, record = out
        if left.size == 0 or right.size == 0:
            continue
        node.split = record
        lbox = rbox = None
        next_cycle = 0
        if use_box:
            box = node.box
            j, t = record.axis, record.threshold
            lbox = (box[0], box[1].copy())
            lbox[1][j] = t
            rbox = (box[0].copy(), box[1])
            rbox[0][j] = t
            next_cycle = node.cycle + 1
        # right pushed first so the left child gets the smaller id
        stack.append((right, node.id, depth + 1, 2 * path + 1, rbox, next_cycle))
        stack.append((left, node.id, depth + 1, 2 * path, lbox, next_cycle))
    return PartitionTree(X, config, nodes)


def _choose_split(X, node, config):
    m = node.count
    if m <= config.min_size or node.depth >= config.max_depth or m < 2:
        return None
    st = node.stats
    if st.avg_diam_sq <= 0.0:
        return None
    rule = config.rule
    if (
        rule.name in OUTLIER_RULES
        and config.enable_distance_split
        and st.max_diam_sq >= config.c * st.avg_diam_sq
    ):
        return split_distance(X, node.members)
    if rule.name == "dyadic":
        return _dyadic_with_skips(X, node, config.dyadic_skip_empty)
    if rule.name == "kd":
        return split_kd(X, node.members)
    if rule.name == "pd":
        return split_pd(X, node.members)
    rng = node_rng(config.seed, node.path)
    if rule.name == "rp":
        return split_rp(X, node.members, rng, rule.bag_size)
    return split_2m(X, node.members, rng, rule.restarts, rule.max_iters)
