# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate-descent kernel for the weighted L1 least-squares problem.

Solves min_b (1/n)||r0 - X b||^2 + sum_j 2 * half_pen[j] * |b_j| in place,
where ``r`` holds the current residual r0 - X b on entry and exit.
"""

import numpy as np

from libc.math cimport fabs
from scipy.linalg.cython_blas cimport ddot, daxpy


cdef inline double _soft(double z, double t) nogil:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


cdef double _sweep(const double[::1, :] X, double[::1] r, double[::1] beta,
                   const double[::1] half_pen, const double[::1] col_sq,
                   const int[::1] cols, int ncols, double inv_n,
                   signed char* active) noexcept nogil:
    cdef int n = X.shape[0]
    cdef int one = 1
    cdef int t, j
    cdef double z, old, new, delta, dmax = 0.0, cj
    for t in range(ncols):
        j = cols[t]
        cj = col_sq[j]
        if cj <= 0.0:
            continue
        old = beta[j]
        z = ddot(&n, &X[0, j], &one, &r[0], &one) * inv_n + cj * old
        new = _soft(z, half_pen[j]) / cj
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            delta = -delta
            daxpy(&n, &delta, &X[0, j], &one, &r[0], &one)
            if fabs(delta) > dmax:
                dmax = fabs(delta)
        if new != 0.0:
            active[j] = 1
    return dmax


cdef inline double _maxabs(double[::1] beta) noexcept nogil:
    cdef Py_ssize_t j
    cdef double m = 1.0
    for j in range(beta.shape[0]):
        if fabs(beta[j]) > m:
            m = fabs(beta[j])
    return m


def cd_weighted_lasso(const double[::1, :] X, double[::1] r, double[::1] beta,
                      const double[::1] half_pen, const double[::1] col_sq,
                      int max_sweeps, double tol):
    """Run cyclic coordinate descent with active-set cycling.

    ``col_sq[j]`` is ``||X_j||^2 / n``. Returns ``(sweeps, converged)``.
    Convergence: largest coefficient change below ``tol * max(1, max|b|)``.
    """
    cdef int p = X.shape[1]
    cdef int n = X.shape[0]
    cdef double inv_n = 1.0 / n
    cdef int sweeps = 0
    cdef bint converged = False
    cdef double dmax
    cdef int j, nact
    flags = (np.asarray(beta) != 0.0).astype(np.int8)
    cdef signed char[::1] flag_view = flags
    cdef signed char* active = &flag_view[0]
    cdef int[::1] all_cols = np.arange(p, dtype=np.intc)
    cdef int[::1] act_cols = np.empty(p, dtype=np.intc)
    with nogil:
        while sweeps < max_sweeps:
            dmax = _sweep(X, r, beta, half_pen, col_sq, all_cols, p, inv_n, active)
            sweeps += 1
            if dmax < tol * _maxabs(beta):
                converged = True
                break
            nact = 0
            for j in range(p):
                if active[j]:
                    act_cols[nact] = j
                    nact += 1
            while sweeps < max_sweeps:
                dmax = _sweep(X, r, beta, half_pen, col_sq, act_cols, nact, inv_n, active)
                sweeps += 1
                if dmax < tol * _maxabs(beta):
                    break
    return sweeps, converged
