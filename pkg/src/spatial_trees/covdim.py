"""Local covariance dimension at multiple scales.

For a ball B(x, r) the covariance dimension at variance-loss ``epsilon`` is
the smallest d whose top-d eigenvalues hold a ``1 - epsilon`` share of the
trace. ``dimension_profile`` averages it over ball centers for a grid of radii.
"""

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateCell, DegenerateData, InvalidParam
from .linalg import Spectrum, eig_sym, point_spectrum
from .diameters import max_diam_sq

EPSILON_PRESETS = (0.1, 0.01)
DEFAULT_NUM_RADII = 20
DEFAULT_CENTER_CAP = 2000

CSV_COLUMNS = ("r", "d_mean", "d_std", "n_mean", "epsilon")

# closed-ball membership slack, so r = diameter really captures every point
_BALL_RTOL = 1e-12


def _eigenvalues(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return np.asarray(spectrum.eigenvalues, dtype=np.float64)
    return np.asarray(spectrum, dtype=np.float64)


def cov_dim(spectrum, epsilon: float) -> int:
    """Smallest d with ``lambda_1 + ... + lambda_d >= (1 - epsilon) * trace``.

    Returns 0 for an all-zero spectrum. Tiny negative eigenvalues from
    rounding are treated as zero.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidParam(f"epsilon must lie in (0, 1), got {epsilon}")
    lam = np.clip(np.sort(_eigenvalues(spectrum))[::-1], 0.0, None)
    total = float(lam.sum())
    if total <= 0.0:
        return 0
    prefix = np.cumsum(lam)
    d = int(np.searchsorted(prefix, (1.0 - epsilon) * total, side="left")) + 1
    return min(d, len(lam))


def spectrum_ratio_k(spectrum, d: int) -> float:
    """``(lambda_1 + ... + lambda_d) / lambda_1``; always between 1 and d."""
    lam = np.sort(_eigenvalues(spectrum))[::-1]
    if not 1 <= d <= len(lam):
        raise InvalidParam(f"d must be in [1, {len(lam)}], got {d}")
    if lam[0] <= 0.0:
        raise DegenerateCell("top eigenvalue is zero")
    return float(np.sum(lam[:d]) / lam[0])


def _ball(X, x, r):
    dist = np.sqrt(np.einsum("ij,ij->i", X - x, X - x))
    return np.nonzero(dist <= r * (1.0 + _BALL_RTOL))[0]


def local_dim_at(X, x, r: float, epsilon: float):
    """Covariance dimension of the closed ball B(x, r).

    Returns ``(d, count)``; ``d`` is None when the ball holds fewer than
    two points or all its points coincide.
    """
    if r <= 0:
        raise InvalidParam("radius must be positive")
    X = np.asarray(getattr(X, "points", X), dtype=np.float64)
    members = _ball(X, np.asarray(x, dtype=np.float64), r)
    count = int(members.size)
    if count < 2:
        return None, count
    d = cov_dim(point_spectrum(X[members]), epsilon)
    return (d if d > 0 else None), count


@dataclass(frozen=True)
class DimensionProfile:
    """Per-radius mean/std of local dimension and mean ball occupancy."""

    epsilon: float
    radii: np.ndarray
    d_mean: np.ndarray
    d_std: np.ndarray
    n_mean: np.ndarray
    #: number of centers contributing a dimension value at each radius
    n_valid: np.ndarray

    @property
    def records(self):
        return list(zip(self.radii.tolist(), self.d_mean.tolist(), self.d_std.tolist(), self.n_mean.tolist()))

    def rows(self):
        for r, dm, ds, nm in self.records:
            yield {"r": r, "d_mean": dm, "d_std": ds, "n_mean": nm, "epsilon": self.epsilon}


def radius_grid(diameter: float, num_radii: int) -> np.ndarray:
    """Uniform grid of ``num_radii`` values in (0, diameter]."""
    if num_radii < 1:
        raise InvalidParam("num_radii must be >= 1")
    return diameter * np.arange(1, num_radii + 1) / num_radii


def choose_centers(n: int, center_cap: Optional[int], seed: int) -> np.ndarray:
    if center_cap is None or n <= center_cap:
        return np.arange(n)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=center_cap, replace=False))


def dimension_profiles(
    X,
    epsilons: Sequence[float] = EPSILON_PRESETS,
    num_radii: int = DEFAULT_NUM_RADII,
    center_cap: Optional[int] = DEFAULT_CENTER_CAP,
    seed: int = 0,
    radii=None,
):
    """One :class:`DimensionProfile` per epsilon, sharing all ball spectra."""
    X = np.asarray(getattr(X, "points", X), dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n, D = X.shape
    if n < 2:
        raise DegenerateData("need at least two points")
    for eps in epsilons:
        if not 0.0 < eps < 1.0:
            raise InvalidParam(f"epsilon must lie in (0, 1), got {eps}")
    diam = float(np.sqrt(max_diam_sq(X)))
    if diam == 0.0:
        raise DegenerateData("all points are identical")
    radii = radius_grid(diam, num_radii) if radii is None else np.asarray(radii, dtype=np.float64)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise InvalidParam("radii must be positive and strictly increasing")

    centers = choose_centers(n, center_cap, seed)
    n_eps, n_r, n_c = len(epsilons), len(radii), len(centers)
    dims = np.full((n_eps, n_c, n_r), np.nan)
    counts = np.zeros((n_c, n_r))

    for ci, c in enumerate(centers):
        Y = X - X[c]
        dist = np.sqrt(np.einsum("ij,ij->i", Y, Y))
        order = np.argsort(dist, kind="stable")
        Y = Y[order]
        cnt = np.searchsorted(dist[order], radii * (1.0 + _BALL_RTOL), side="right")
        counts[ci] = cnt
        s1 = np.zeros(D)
        s2 = np.zeros((D, D))
        prev = 0
        last = None
        for ri, m in enumerate(cnt):
            if m != prev:
                new = Y[prev:m]
                s1 += new.sum(axis=0)
                s2 += new.T @ new
                prev = m
                last = None
            if m < 2:
                continue
            if last is None:
                if m < D:
                    lam = point_spectrum(Y[:m]).eigenvalues
                else:
                    mu = s1 / m
                    S = s2 / m - np.outer(mu, mu)
                    lam = eig_sym(0.5 * (S + S.T)).eigenvalues
                last = [cov_dim(lam, eps) for eps in epsilons]
            for ei, d in enumerate(last):
                if d > 0:
                    dims[ei, ci, ri] = d

    n_mean = counts.mean(axis=0)
    out = []
    for ei, eps in enumerate(epsilons):
        valid = ~np.isnan(dims[ei])
        n_valid = valid.sum(axis=0)
        with np.errstate(invalid="ignore"):
            d_mean = np.where(n_valid > 0, np.nansum(dims[ei], axis=0) / np.maximum(n_valid, 1), np.nan)
            sq = np.nansum((dims[ei] - d_mean) ** 2, axis=0)
            d_std = np.where(n_valid > 0, np.sqrt(sq / np.maximum(n_valid, 1)), np.nan)
        out.append(DimensionProfile(float(eps), radii.copy(), d_mean, d_std, n_mean.copy(), n_valid))
    return out


def dimension_profile(X, num_radii: int = DEFAULT_NUM_RADII, epsilon: float = 0.1, **kwargs) -> DimensionProfile:
    return dimension_profiles(X, (epsilon,), num_radii=num_radii, **kwargs)[0]


def write_profiles_csv(profiles, path, extra: Optional[dict] = None):
    """Write profiles as ``r,d_mean,d_std,n_mean,epsilon`` (plus any ``extra`` columns)."""
    extra = extra or {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(CSV_COLUMNS) + list(extra))
        for prof in profiles:
            for row in prof.rows():
                w.writerow([format_float(row[k]) for k in CSV_COLUMNS] + [extra[k] for k in extra])


def format_float(v) -> str:
    v = float(v)
    if np.isnan(v):
        return "nan"
    return repr(v)
