"""Least-squares, ridge and lasso regressors with scikit-learn's estimator API."""

import warnings

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from ..exceptions import CollinearityWarning, NonConvergence, SingularDesign
from ._cd import coordinate_descent


def standardize(X):
    """Center columns and scale to unit (population) variance.

    Constant columns keep scale 1 so they standardize to exactly zero.
    """
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return (X - mean) / scale, mean, scale


class OLSRegressor(RegressorMixin, BaseEstimator):
    """Ordinary least squares with an intercept.

    Solved by a column-pivoted QR decomposition of ``[1, X]``.  Exactly
    collinear columns are detected from the diagonal of ``R``; with
    ``collinear="drop"`` they receive coefficient 0 and a
    :class:`CollinearityWarning` is emitted, with ``collinear="raise"`` a
    :class:`SingularDesign` error is raised instead.
    """

    def __init__(self, collinear="drop"):
        self.collinear = collinear

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, ensure_min_features=0)
        return self._fit_validated(X, y)

    def _fit_validated(self, X, y):
        n, p = X.shape
        self.n_features_in_ = p
        D = np.empty((n, p + 1))
        D[:, 0] = 1.0
        D[:, 1:] = X
        Q, R, piv = linalg.qr(D, mode="economic", pivoting=True, check_finite=False)
        diag = np.abs(np.diag(R))
        tol = max(n, p + 1) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
        rank = int(np.sum(diag > tol))
        if rank == 0:
            raise SingularDesign("design matrix has rank zero")
        full = np.zeros(p + 1)
        if rank < p + 1:
            if self.collinear == "raise":
                raise SingularDesign(f"design has rank {rank} < {p + 1} columns")
            warnings.warn(
                f"dropping {p + 1 - rank} exactly collinear design column(s)",
                CollinearityWarning,
                stacklevel=2,
            )
        sol = linalg.solve_triangular(R[:rank, :rank], Q[:, :rank].T @ y, check_finite=False)
        full[piv[:rank]] = sol
        self.intercept_ = float(full[0])
        self.coef_ = full[1:]
        self.rank_ = rank
        self.dropped_ = tuple(int(c) for c in sorted(piv[rank:]))
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False, ensure_min_features=0)
        return self._predict_validated(X)

    def _predict_validated(self, X):
        return self.intercept_ + X @ self.coef_


class _PenalizedBase(RegressorMixin, BaseEstimator):
    def _solve(self, Z, yc, lam, beta):
        raise NotImplementedError

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        return self._fit_validated(X, y)

    def _fit_validated(self, X, y):
        self.n_features_in_ = X.shape[1]
        Z, mean, scale = standardize(X)
        ybar = float(y.mean())
        beta = self._solve(Z, y - ybar, float(self.alpha), np.zeros(X.shape[1]))
        self.coef_std_ = beta
        self.coef_ = beta / scale
        self.intercept_ = ybar - float(mean @ self.coef_)
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return self._predict_validated(X)

    def _predict_validated(self, X):
        return self.intercept_ + X @ self.coef_


class LassoRegressor(_PenalizedBase):
    """L1-penalized least squares on standardized covariates, intercept unpenalized.

    Minimizes ``(1/2n)||y - b0 - Z b||^2 + alpha * ||b||_1`` by cyclic
    coordinate descent, where ``Z`` is the standardized design.
    """

    def __init__(self, alpha=1.0, max_sweeps=100_000, tol=1e-7):
        self.alpha = alpha
        self.max_sweeps = max_sweeps
        self.tol = tol

    def _solve(self, Z, yc, lam, beta):
        sweeps = coordinate_descent(Z, yc, lam, beta, True, self.max_sweeps, self.tol)
        if sweeps > self.max_sweeps:
            raise NonConvergence(self.max_sweeps)
        self.n_sweeps_ = sweeps
        return beta


class RidgeRegressor(_PenalizedBase):
    """L2-penalized least squares on standardized covariates, intercept unpenalized.

    Minimizes ``(1/2n)||y - b0 - Z b||^2 + (alpha/2) ||b||^2``.  ``solver``
    selects the closed form (``"closed"``) or coordinate descent (``"cd"``).
    """

    def __init__(self, alpha=1.0, solver="closed", max_sweeps=100_000, tol=1e-12):
        self.alpha = alpha
        self.solver = solver
        self.max_sweeps = max_sweeps
        self.tol = tol

    def _solve(self, Z, yc, lam, beta):
        if self.solver == "cd":
            sweeps = coordinate_descent(Z, yc, lam, beta, False, self.max_sweeps, self.tol)
            if sweeps > self.max_sweeps:
                raise NonConvergence(self.max_sweeps)
            return beta
        return ridge_closed_form(Z, yc, lam)


def ridge_closed_form(Z, yc, lam):
    n, p = Z.shape
    G = Z.T @ Z / n
    G[np.diag_indices(p)] += lam
    return linalg.solve(G, Z.T @ yc / n, assume_a="pos", check_finite=False)


def lambda_max(Z, yc, penalty):
    """Smallest lasso penalty zeroing every coefficient.

    For ridge the value is divided by 1e-3, the convention glmnet uses for its
    ``alpha = 0`` sequence.
    """
    lmax = float(np.max(np.abs(Z.T @ yc))) / Z.shape[0] if Z.shape[1] else 0.0
    if penalty == "ridge":
        lmax /= 1e-3
    return lmax if lmax > 0 else 1.0


def penalty_path(Z, yc, lambdas, penalty, max_sweeps=100_000, tol=1e-7):
    """Coefficients along a decreasing penalty sequence, warm-started."""
    betas = np.zeros((len(lambdas), Z.shape[1]))
    beta = np.zeros(Z.shape[1])
    for i, lam in enumerate(lambdas):
        if penalty == "lasso":
            sweeps = coordinate_descent(Z, yc, float(lam), beta, True, max_sweeps, tol)
            if sweeps > max_sweeps:
                raise NonConvergence(max_sweeps)
        else:
            beta = ridge_closed_form(Z, yc, float(lam))
        betas[i] = beta
    return betas
