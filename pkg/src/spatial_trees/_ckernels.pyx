# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: cyclic Jacobi, power iteration, exact max pair distance.

Signatures and return conventions match ``_pykernels`` exactly.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

from . import _pykernels

cnp.import_array()

# hand off to the blocked kernel once more than m / DENSE_RATIO rows stay
# live (the scalar loop is roughly that many times slower than BLAS per pair)
DENSE_RATIO = 20
DENSE_WORK = 20_000


cdef double _offdiag_sq(double[:, ::1] a, Py_ssize_t n) noexcept nogil:
    cdef double off = 0.0
    cdef Py_ssize_t p, q
    for p in range(n - 1):
        for q in range(p + 1, n):
            off += a[p, q] * a[p, q]
    return 2.0 * off


def jacobi_eigh(a_in, bint want_vectors=True, double tol=1e-15, int max_sweeps=100):
    """Eigen-decompose a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, V)`` with ``w`` unsorted (diagonal order) and ``V`` holding
    eigenvectors as columns, or ``None`` when ``want_vectors`` is false.
    """
    cdef double[:, ::1] a = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a.shape[0]
    V_arr = np.eye(n, dtype=np.float64) if want_vectors else np.zeros((1, 1))
    cdef double[:, ::1] v = V_arr
    cdef Py_ssize_t p, q, k
    cdef double apq, app, aqq, theta, t, c, s, x, y
    cdef double fro2 = 0.0, off, prev_off
    cdef int sweep

    for p in range(n):
        for q in range(n):
            fro2 += a[p, q] * a[p, q]

    with nogil:
        prev_off = -1.0
        for sweep in range(max_sweeps):
            off = _offdiag_sq(a, n)
            if off <= tol * tol * fro2:
                break
            if prev_off >= 0.0 and off >= prev_off:
                break
            prev_off = off
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    app = a[p, p]
                    aqq = a[q, q]
                    theta = (aqq - app) / (2.0 * apq)
                    if fabs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                        if theta < 0.0:
                            t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for k in range(n):
                        x = a[k, p]
                        y = a[k, q]
                        a[k, p] = c * x - s * y
                        a[k, q] = s * x + c * y
                    for k in range(n):
                        x = a[p, k]
                        y = a[q, k]
                        a[p, k] = c * x - s * y
                        a[q, k] = s * x + c * y
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    if want_vectors:
                        for k in range(n):
                            x = v[k, p]
                            y = v[k, q]
                            v[k, p] = c * x - s * y
                            v[k, q] = s * x + c * y

    w = np.empty(n, dtype=np.float64)
    for p in range(n):
        w[p] = a[p, p]
    return w, (V_arr if want_vectors else None)


def power_iteration(S_in, v0_in, double tol=1e-10, int max_iter=10000):
    """Dominant eigenpair of a symmetric PSD matrix.

    Returns ``(v, lam, converged)``; convergence means
    ``||S v - lam v|| <= tol * |lam|``.
    """
    cdef const double[:, ::1] S = np.ascontiguousarray(S_in, dtype=np.float64)
    cdef Py_ssize_t n = S.shape[0]
    v_arr = np.array(v0_in, dtype=np.float64, copy=True)
    w_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] v = v_arr
    cdef double[::1] w = w_arr
    cdef Py_ssize_t i, j
    cdef int it
    cdef double norm, lam = 0.0, res, acc
    cdef bint converged = False

    with nogil:
        norm = 0.0
        for i in range(n):
            norm += v[i] * v[i]
        norm = sqrt(norm)
        if norm == 0.0:
            v[0] = 1.0
            norm = 1.0
        for i in range(n):
            v[i] /= norm
        for it in range(max_iter):
            lam = 0.0
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += S[i, j] * v[j]
                w[i] = acc
                lam += acc * v[i]
            res = 0.0
            norm = 0.0
            for i in range(n):
                res += (w[i] - lam * v[i]) * (w[i] - lam * v[i])
                norm += w[i] * w[i]
            if sqrt(res) <= tol * fabs(lam):
                converged = True
                break
            if norm == 0.0:
                break
            norm = sqrt(norm)
            for i in range(n):
                v[i] = w[i] / norm
    return v_arr, lam, bool(converged)


def max_pair_sq(X_in):
    """Exact maximum squared Euclidean distance over all point pairs.

    Points are visited in decreasing distance from the centroid; the
    triangle inequality through the centroid prunes pairs that cannot win.
    When that bound is too loose to prune much (points on a sphere around the
    centroid, say) the blocked BLAS kernel from ``_pykernels`` is used instead.
    """
    cdef const double[:, ::1] X = np.ascontiguousarray(X_in, dtype=np.float64)
    cdef Py_ssize_t m = X.shape[0], D = X.shape[1]
    if m < 2:
        return 0.0
    center_arr = np.asarray(X_in, dtype=np.float64).mean(axis=0)
    cdef double[::1] center = center_arr
    r_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] r = r_arr
    cdef Py_ssize_t i, j, k, ii, jj
    cdef double acc, diff, best = 0.0, bound
    for i in range(m):
        acc = 0.0
        for k in range(D):
            diff = X[i, k] - center[k]
            acc += diff * diff
        r[i] = sqrt(acc)
    order_arr = np.argsort(-r_arr, kind="stable").astype(np.intp)
    cdef Py_ssize_t[::1] order = order_arr

    # seed with one full row, then count rows whose own bound can still win
    i = order[0]
    for j in range(m):
        acc = 0.0
        for k in range(D):
            diff = X[i, k] - X[j, k]
            acc += diff * diff
        if acc > best:
            best = acc
    cdef Py_ssize_t active = 0
    for ii in range(m):
        bound = 2.0 * r[order[ii]]
        if bound * bound * (1.0 + 1e-12) < best:
            break
        active += 1
    if active * DENSE_RATIO > m and m * D > DENSE_WORK:
        return _pykernels.max_pair_sq(np.asarray(X_in, dtype=np.float64))

    with nogil:
        for ii in range(m - 1):
            i = order[ii]
            bound = 2.0 * r[i]
            if bound * bound * (1.0 + 1e-12) < best:
                break
            for jj in range(ii + 1, m):
                j = order[jj]
                bound = r[i] + r[j]
                if bound * bound * (1.0 + 1e-12) < best:
                    break
                acc = 0.0
                for k in range(D):
                    diff = X[i, k] - X[j, k]
                    acc += diff * diff
                if acc > best:
                    best = acc
    return best
