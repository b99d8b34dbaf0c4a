"""Synthetic point sets with known intrinsic dimension, plus CSV I/O."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InvalidParam


@dataclass(frozen=True)
class PointSet:
    """n points in R^D with optional per-point responses."""

    points: np.ndarray
    responses: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.array(self.points, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] < 1:
            raise InvalidParam(f"points must be a non-empty (n, D) array, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise InvalidParam("points contain non-finite values")
        X.setflags(write=False)
        object.__setattr__(self, "points", X)
        if self.responses is not None:
            y = np.array(self.responses, dtype=np.float64).ravel()
            if y.shape[0] != X.shape[0]:
                raise InvalidParam("responses must have one value per point")
            y.setflags(write=False)
            object.__setattr__(self, "responses", y)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def D(self) -> int:
        return self.points.shape[1]

    def subset(self, idx) -> "PointSet":
        y = None if self.responses is None else self.responses[idx]
        return PointSet(self.points[idx], y, dict(self.meta))


def sinusoid_manifold(n: int = 20000, D: int = 10, seed: int = 0) -> PointSet:
    """1-d closed curve ``t -> sqrt(2/D) (sin t, cos t, ..., sin(Dt/2), cos(Dt/2))``.

    ``t`` is uniform on [0, 2 pi] and returned as the response. Every point has
    unit norm.
    """
    if D < 2 or D % 2:
        raise InvalidParam(f"D must be a positive even integer, got {D}")
    if n < 1:
        raise InvalidParam("n must be >= 1")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, 2.0 * np.pi, size=n)
    freqs = np.arange(1, D // 2 + 1)
    angles = t[:, None] * freqs[None, :]
    X = np.empty((n, D))
    X[:, 0::2] = np.sin(angles)
    X[:, 1::2] = np.cos(angles)
    X *= np.sqrt(2.0 / D)
    meta = {"generator": "sinusoid", "seed": seed, "params": {"n": n, "D": D}}
    return PointSet(X, t, meta)


def noisy_swissroll(n: int = 5000, noise_sigma: float = 0.5, seed: int = 0) -> PointSet:
    """Swiss roll ``(t cos t, h, t sin t)`` plus isotropic Gaussian noise.

    ``t`` uniform on [3 pi/2, 9 pi/2], ``h`` uniform on [0, 20]; responses are ``t``.
    """
    if n < 1:
        raise InvalidParam("n must be >= 1")
    if noise_sigma < 0:
        raise InvalidParam("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size=n)
    h = rng.uniform(0.0, 20.0, size=n)
    X = np.column_stack([t * np.cos(t), h, t * np.sin(t)])
    if noise_sigma > 0:
        X = X + noise_sigma * rng.standard_normal(X.shape)
    meta = {"generator": "swissroll", "seed": seed, "params": {"n": n, "noise_sigma": noise_sigma}}
    return PointSet(X, t, meta)


def affine_cloud(n: int = 2000, D: int = 10, d: int = 3, seed: int = 0) -> PointSet:
    """Standard Gaussian sample inside a random d-dimensional linear subspace of R^D."""
    if not 1 <= d <= D:
        raise InvalidParam(f"need 1 <= d <= D, got d={d}, D={D}")
    if n < 1:
        raise InvalidParam("n must be >= 1")
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((D, d)))
    coeffs = rng.standard_normal((n, d))
    meta = {"generator": "affine", "seed": seed, "params": {"n": n, "D": D, "d": d}}
    return PointSet(coeffs @ basis.T, None, meta)


GENERATORS = {
    "sinusoid": sinusoid_manifold,
    "swissroll": noisy_swissroll,
    "affine": affine_cloud,
}


def generate(name: str, seed: int, **params) -> PointSet:
    try:
        fn = GENERATORS[name]
    except KeyError:
        raise InvalidParam(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    try:
        return fn(seed=seed, **params)
    except TypeError as exc:
        raise InvalidParam(f"bad parameters for {name}: {exc}") from None


def write_csv(ps: PointSet, path, write_meta: bool = True) -> Path:
    """Write ``x0..x{D-1}[,y]`` with a header row; metadata goes to ``<path>.json``."""
    path = Path(path)
    header = [f"x{j}" for j in range(ps.D)]
    data = ps.points
    if ps.responses is not None:
        header.append("y")
        data = np.column_stack([data, ps.responses])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in data:
            w.writerow([repr(float(v)) for v in row])
    if write_meta:
        meta_path = path.with_suffix(path.suffix + ".json")
        meta_path.write_text(json.dumps(ps.meta, sort_keys=True, indent=2) + "\n")
    return path


def read_csv(path) -> PointSet:
    """Read a dataset written by :func:`write_csv` (a trailing ``y`` column is the response)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidParam(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    if not rows:
        raise InvalidParam(f"{path}: no data rows")
    try:
        data = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise InvalidParam(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InvalidParam(f"{path}: ragged rows")
    meta = {}
    meta_path = path.with_suffix(path.suffix + ".json")
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
    if header[-1] == "y":
        return PointSet(data[:, :-1], data[:, -1], meta)
    return PointSet(data, None, meta)
