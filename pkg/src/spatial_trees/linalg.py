"""Dense vector and matrix primitives.

Covariances use population normalization (divisor m) throughout, which makes
the eigenvalue sum of a cell's covariance equal half its average squared
diameter.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .errors import DegenerateCell, EmptyCell, InvalidMatrix

SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted descending, with optional matching column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    @property
    def trace(self) -> float:
        return float(np.sum(self.eigenvalues))

    def __len__(self):
        return len(self.eigenvalues)


def as_points(points) -> np.ndarray:
    """Coerce input to a 2-d float array of shape (m, D)."""
    X = np.asarray(points, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array of points, got shape {X.shape}")
    if X.shape[0] == 0:
        raise EmptyCell("empty point set")
    return X


def mean(points) -> np.ndarray:
    return as_points(points).mean(axis=0)


def covariance(points) -> np.ndarray:
    """Population covariance ``(1/m) sum (x - mean)(x - mean)^T``."""
    X = as_points(points)
    Xc = X - X.mean(axis=0)
    S = (Xc.T @ Xc) / X.shape[0]
    return 0.5 * (S + S.T)


def _fix_sign(v):
    """Flip ``v`` so its first non-negligible coordinate is positive."""
    mags = np.abs(v)
    big = np.nonzero(mags > 1e-12 * mags.max())[0] if mags.max() > 0 else []
    if len(big) and v[big[0]] < 0:
        return -v
    return v


def _check_symmetric(S):
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
        raise InvalidMatrix(f"expected a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise InvalidMatrix("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise InvalidMatrix("matrix is not symmetric")
    return S


def eig_sym(S, want_vectors: bool = False) -> Spectrum:
    """Full spectrum of a symmetric matrix, eigenvalues descending.

    Eigenvectors, when requested, are orthonormal columns with the first
    non-negligible coordinate of each made positive.
    """
    S = _check_symmetric(S)
    w, V = kernels.jacobi_eigh(S, want_vectors)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    if V is None:
        return Spectrum(w)
    V = V[:, order]
    for j in range(V.shape[1]):
        V[:, j] = _fix_sign(V[:, j])
    return Spectrum(w, V)


def top_eigenvector(S) -> np.ndarray:
    """Unit principal eigenvector of a symmetric PSD matrix.

    Power iteration first (residual 1e-10, at most 10 000 steps); if it stalls
    or lands below the largest diagonal entry, the Jacobi solver decides.
    """
    S = _check_symmetric(S)
    diag = np.diag(S)
    if float(np.sum(diag)) <= 0.0:
        raise DegenerateCell("zero-trace matrix has no principal direction")
    if S.shape[0] == 1:
        return np.ones(1)
    j = int(np.argmax(diag))
    v, lam, converged = kernels.power_iteration(S, S[:, j].copy(), 1e-10, 10000)
    if not converged or lam < diag[j] * (1.0 - 1e-12):
        v = eig_sym(S, want_vectors=True).eigenvectors[:, 0]
    v = v / np.linalg.norm(v)
    return _fix_sign(v)


def point_spectrum(points) -> Spectrum:
    """Eigenvalues of the population covariance of ``points``, length D.

    With fewer points than dimensions the nonzero part comes from the m x m
    Gram matrix of centered points; the rest are exact zeros.
    """
    X = as_points(points)
    m, D = X.shape
    if m >= D:
        return eig_sym(covariance(X))
    Xc = X - X.mean(axis=0)
    G = (Xc @ Xc.T) / m
    w = eig_sym(0.5 * (G + G.T)).eigenvalues
    return Spectrum(np.concatenate([w, np.zeros(D - m)]))


def top_direction(points) -> np.ndarray:
    """Principal covariance direction of ``points`` (Gram route when m < D)."""
    X = as_points(points)
    m, D = X.shape
    if m >= D:
        return top_eigenvector(covariance(X))
    Xc = X - X.mean(axis=0)
    G = (Xc @ Xc.T) / m
    u = top_eigenvector(0.5 * (G + G.T))
    v = Xc.T @ u
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegenerateCell("zero-trace cell has no principal direction")
    return _fix_sign(v / norm)


def sample_sphere(D: int, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """Uniform direction(s) on the unit sphere in R^D via normalized Gaussians."""
    if D < 1:
        raise ValueError("D must be >= 1")
    shape = (D,) if size is None else (size, D)
    while True:
        g = rng.standard_normal(shape)
        norms = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.all(norms > 0):
            return g / norms
