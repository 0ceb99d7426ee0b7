"""Coordinate-descent kernels for the penalized least-squares objectives

    lasso:  (1/2n) ||y - X b||^2 + lam * ||b||_1
    ridge:  (1/2n) ||y - X b||^2 + (lam/2) * ||b||^2

``X`` and ``y`` are expected centered; no intercept is fitted here.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True)
def coordinate_descent(X, y, lam, beta, l1, max_sweeps, tol):
    """Cyclic coordinate descent from the warm start ``beta`` (modified in place).

    Stops when ``max_j |delta_j| / (1 + |beta_j|) < tol`` after a full sweep.
    Returns the number of sweeps performed (``max_sweeps + 1`` means no
    convergence).
    """
    n, p = X.shape
    col_sq = np.empty(p)
    for j in range(p):
        s = 0.0
        for i in range(n):
            s += X[i, j] * X[i, j]
        col_sq[j] = s / n
    r = y.copy()
    for j in range(p):
        if beta[j] != 0.0:
            for i in range(n):
                r[i] -= X[i, j] * beta[j]
    for sweep in range(1, max_sweeps + 1):
        worst = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                beta[j] = 0.0
                continue
            g = 0.0
            for i in range(n):
                g += X[i, j] * r[i]
            z = g / n + col_sq[j] * beta[j]
            if l1:
                new = _soft(z, lam) / col_sq[j]
            else:
                new = z / (col_sq[j] + lam)
            delta = new - beta[j]
            if delta != 0.0:
                for i in range(n):
                    r[i] -= X[i, j] * delta
                beta[j] = new
                rel = abs(delta) / (1.0 + abs(new))
                if rel > worst:
                    worst = rel
        if worst < tol:
            return sweep
    return max_sweeps + 1


def lasso_objective(X, y, beta, lam):
    r = y - X @ beta
    return 0.5 * np.dot(r, r) / X.shape[0] + lam * np.sum(np.abs(beta))


def ridge_objective(X, y, beta, lam):
    r = y - X @ beta
    return 0.5 * np.dot(r, r) / X.shape[0] + 0.5 * lam * np.dot(beta, beta)
