"""NumPy implementations of the hot kernels.

Used when the compiled ``_ckernels`` extension is unavailable or when
``SPATIAL_TREES_PURE=1`` is set. Same signatures and return conventions.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    size = n + (n % 2)
    players = list(range(size))
    rounds = []
    for _ in range(size - 1):
        pairs = []
        for i in range(size // 2):
            p, q = players[i], players[size - 1 - i]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        if pairs:
            arr = np.array(pairs, dtype=np.intp)
            rounds.append((arr[:, 0], arr[:, 1]))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def jacobi_eigh(a_in, want_vectors=True, tol=1e-15, max_sweeps=100):
    """Jacobi eigen-decomposition with round-robin ordering.

    Each round applies a set of rotations on disjoint index pairs at once,
    so a sweep costs n - 1 vectorized updates instead of n(n-1)/2 scalar ones.
    Returns ``(w, V)`` like the compiled kernel.
    """
    a = np.array(a_in, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n) if want_vectors else None
    fro2 = float(np.sum(a * a))
    offmask = ~np.eye(n, dtype=bool)
    rounds = _round_robin(n)
    prev_off = -1.0
    for _ in range(max_sweeps):
        off = float(np.sum(a[offmask] ** 2))
        if off <= tol * tol * fro2:
            break
        if prev_off >= 0.0 and off >= prev_off:
            break
        prev_off = off
        for P, Q in rounds:
            apq = a[P, Q]
            active = apq != 0.0
            if not active.any():
                continue
            P, Q, apq = P[active], Q[active], apq[active]
            theta = (a[Q, Q] - a[P, P]) / (2.0 * apq)
            with np.errstate(over="ignore", divide="ignore"):
                t = np.where(
                    np.abs(theta) > 1e150,
                    0.5 / theta,
                    np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)),
                )
            t = np.where(theta == 0.0, 1.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            x, y = a[:, P].copy(), a[:, Q].copy()
            a[:, P] = c * x - s * y
            a[:, Q] = s * x + c * y
            x, y = a[P, :].copy(), a[Q, :].copy()
            a[P, :] = c[:, None] * x - s[:, None] * y
            a[Q, :] = s[:, None] * x + c[:, None] * y
            a[P, Q] = 0.0
            a[Q, P] = 0.0
            if v is not None:
                x, y = v[:, P].copy(), v[:, Q].copy()
                v[:, P] = c * x - s * y
                v[:, Q] = s * x + c * y
    return np.diag(a).copy(), v


def power_iteration(S_in, v0_in, tol=1e-10, max_iter=10000):
    S = np.ascontiguousarray(S_in, dtype=np.float64)
    v = np.array(v0_in, dtype=np.float64, copy=True)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        v[0] = 1.0
        norm = 1.0
    v /= norm
    lam = 0.0
    for _ in range(max_iter):
        w = S @ v
        lam = float(w @ v)
        if np.linalg.norm(w - lam * v) <= tol * abs(lam):
            return v, lam, True
        norm = np.linalg.norm(w)
        if norm == 0.0:
            break
        v = w / norm
    return v, lam, False


def max_pair_sq(X_in, block=512):
    """Exact maximum squared pairwise distance.

    A blocked Gram-matrix pass finds every pair whose approximate squared
    distance is within rounding error of the maximum; those candidates are
    then re-evaluated by direct differences.
    """
    X = np.asarray(X_in, dtype=np.float64)
    m = X.shape[0]
    if m < 2:
        return 0.0
    Xc = X - X.mean(axis=0)
    sq = np.einsum("ij,ij->i", Xc, Xc)
    scale = float(sq.max())
    if scale == 0.0:
        return 0.0
    slack = 1e-10 * scale + 1e-300
    best_approx = -np.inf
    cand_i, cand_j = [], []
    for start in range(0, m, block):
        stop = min(start + block, m)
        G = sq[start:stop, None] + sq[None, start:] - 2.0 * (Xc[start:stop] @ Xc[start:].T)
        # keep the strict upper triangle of this block row
        G[np.tril_indices(stop - start, 0, G.shape[1])] = -np.inf
        blk_max = float(G.max()) if G.size else -np.inf
        if blk_max > best_approx:
            best_approx = blk_max
        ii, jj = np.nonzero(G >= best_approx - 2.0 * slack)
        cand_i.append(ii + start)
        cand_j.append(jj + start)
    ci = np.concatenate(cand_i)
    cj = np.concatenate(cand_j)
    diff = X[ci] - X[cj]
    return float(np.max(np.einsum("ij,ij->i", diff, diff)))
