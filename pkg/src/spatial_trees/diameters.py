"""Data-diameter statistics for cells and partitions.

All quantities are squared. For a cell A with m points:

* ``max_diam_sq(A)``  max over pairs of ``||x - x'||^2``
* ``avg_diam_sq(A)``  ``(1/m^2)`` times the sum over ordered pairs of ``||x - x'||^2``,
  which equals ``2 * trace(cov(A))``

The ``1/m^2`` normalization is what makes :func:`split_decrease` an exact
identity for any bipartition.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import EmptyCell, InvalidPartition
from .linalg import as_points

#: cells larger than this use an upper bound instead of the exact O(m^2) max
EXACT_MAX_DIAM_CUTOFF = 20000


@dataclass(frozen=True)
class CellView:
    """A subset of a parent point array, addressed by row indices.

    ``weight`` is the cell's share of the parent's points.
    """

    parent: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        object.__setattr__(self, "indices", idx)
        n = len(self.parent)
        if idx.size and (idx.min() < 0 or idx.max() >= n):
            raise InvalidPartition("cell index out of range")
        if len(np.unique(idx)) != idx.size:
            raise InvalidPartition("cell indices are not distinct")

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.parent)[self.indices]

    @property
    def count(self) -> int:
        return int(self.indices.size)

    @property
    def weight(self) -> float:
        return self.count / len(self.parent)


@dataclass(frozen=True)
class DiameterStats:
    max_diam_sq: float
    avg_diam_sq: float
    count: int
    #: True when max_diam_sq is the 4 * max radius^2 bound, not the exact value
    approximate: bool = False


def _points(A):
    if isinstance(A, CellView):
        X = A.points
        if X.shape[0] == 0:
            raise EmptyCell("empty cell")
        return X
    return as_points(A)


def max_diam_sq(A, exact_cutoff: int = EXACT_MAX_DIAM_CUTOFF) -> float:
    """Squared maximum interpoint distance.

    Exact for cells up to ``exact_cutoff`` points. Beyond that returns the
    upper bound ``4 * max ||x - mean||^2``; use :func:`diameter_stats` to see
    whether the bound was used.
    """
    return diameter_stats(A, exact_cutoff).max_diam_sq


def avg_diam_sq(A) -> float:
    """Average squared interpoint distance, ``2 * trace(cov)``, in O(mD)."""
    X = _points(A)
    Xc = X - X.mean(axis=0)
    return 2.0 * float(np.einsum("ij,ij->", Xc, Xc)) / X.shape[0]


def diameter_stats(A, exact_cutoff: int = EXACT_MAX_DIAM_CUTOFF) -> DiameterStats:
    X = _points(A)
    m = X.shape[0]
    Xc = X - X.mean(axis=0)
    r2 = np.einsum("ij,ij->i", Xc, Xc)
    avg = 2.0 * float(r2.sum()) / m
    if m > exact_cutoff:
        return DiameterStats(4.0 * float(r2.max()), avg, m, approximate=True)
    mx = float(kernels.max_pair_sq(np.ascontiguousarray(X)))
    if avg == 0.0:
        mx = 0.0
    return DiameterStats(mx, avg, m)


def partition_stats(cells: Sequence[CellView], tol: float = 1e-12):
    """Weighted averages ``(sum mu(A) max_diam_sq(A), sum mu(A) avg_diam_sq(A))``.

    Weights must sum to one within ``tol``.
    """
    cells = list(cells)
    if not cells:
        raise InvalidPartition("no cells")
    weights = np.array([c.weight for c in cells])
    if abs(weights.sum() - 1.0) > tol:
        raise InvalidPartition(f"cell weights sum to {weights.sum():.15g}, not 1")
    stats = [diameter_stats(c) for c in cells]
    mx = float(sum(w * s.max_diam_sq for w, s in zip(weights, stats)))
    av = float(sum(w * s.avg_diam_sq for w, s in zip(weights, stats)))
    return mx, av


def _bipartition(A, A1, A2):
    if isinstance(A, CellView):
        if not (isinstance(A1, CellView) and isinstance(A2, CellView)):
            raise InvalidPartition("children must be CellViews when the parent is")
        parent = set(A.indices.tolist())
        left, right = set(A1.indices.tolist()), set(A2.indices.tolist())
        if left & right or (left | right) != parent or not left or not right:
            raise InvalidPartition("children do not bipartition the parent cell")
        return _points(A1), _points(A2), A.count
    X1, X2 = as_points(A1), as_points(A2)
    m = len(as_points(A))
    if len(X1) + len(X2) != m:
        raise InvalidPartition("child sizes do not add up to the parent size")
    return X1, X2, m


def split_decrease(A, A1, A2) -> float:
    """Drop in average squared diameter caused by splitting A into A1, A2.

    Computed as ``2 mu1 mu2 ||mean(A1) - mean(A2)||^2`` with weights taken
    relative to A. Equals ``avg_diam_sq(A) - (mu1 avg_diam_sq(A1) + mu2 avg_diam_sq(A2))``.
    """
    X1, X2, m = _bipartition(A, A1, A2)
    w1, w2 = len(X1) / m, len(X2) / m
    d = X1.mean(axis=0) - X2.mean(axis=0)
    return 2.0 * w1 * w2 * float(d @ d)


def children_avg_diam_sq(A1, A2) -> float:
    """Weighted average squared diameter of a bipartition (weights relative to the union)."""
    X1, X2 = _points(A1), _points(A2)
    m = len(X1) + len(X2)
    return (len(X1) * avg_diam_sq(X1) + len(X2) * avg_diam_sq(X2)) / m
