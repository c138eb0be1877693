"""Pure-Python coordinate-descent kernel; same contract as the compiled ``_cd``."""

import numpy as np


def _sweep(X, r, beta, half_pen, col_sq, cols, inv_n, active):
    dmax = 0.0
    for j in cols:
        cj = col_sq[j]
        if cj <= 0.0:
            continue
        xj = X[:, j]
        old = beta[j]
        z = (xj @ r) * inv_n + cj * old
        t = half_pen[j]
        if z > t:
            new = (z - t) / cj
        elif z < -t:
            new = (z + t) / cj
        else:
            new = 0.0
        delta = new - old
        if delta != 0.0:
            beta[j] = new
            r -= delta * xj
            if abs(delta) > dmax:
                dmax = abs(delta)
        if new != 0.0:
            active[j] = True
    return dmax


def cd_weighted_lasso(X, r, beta, half_pen, col_sq, max_sweeps, tol):
    """Run cyclic coordinate descent with active-set cycling.

    Mirrors :func:`rcvar._cd.cd_weighted_lasso`; ``r`` and ``beta`` are
    updated in place. Returns ``(sweeps, converged)``.
    """
    n, p = X.shape
    inv_n = 1.0 / n
    active = beta != 0.0
    all_cols = range(p)
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        dmax = _sweep(X, r, beta, half_pen, col_sq, all_cols, inv_n, active)
        sweeps += 1
        if dmax < tol * max(1.0, float(np.max(np.abs(beta)))):
            converged = True
            break
        act = np.flatnonzero(active).tolist()
        while sweeps < max_sweeps:
            dmax = _sweep(X, r, beta, half_pen, col_sq, act, inv_n, active)
            sweeps += 1
            if dmax < tol * max(1.0, float(np.max(np.abs(beta)))):
                break
    return sweeps, converged
