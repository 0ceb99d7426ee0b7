"""Penalty selection by inner K-fold cross-validation (the ``lambda.min`` rule)."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .._rng import make_rng
from .linear import lambda_max, penalty_path, standardize


def inner_folds(n, folds, seed):
    """Random (unstratified) fold labels for ``n`` rows, deterministic in ``seed``."""
    folds = min(int(folds), n)
    perm = make_rng(seed, 1).permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[perm] = np.arange(n) % folds
    return fold_of


class PenalizedCV(RegressorMixin, BaseEstimator):
    """Lasso or ridge with the penalty chosen by inner cross-validation.

    The penalty sequence is computed once from the full training data: either
    the explicit ``grid`` or ``n_lambda`` log-spaced values from the
    all-zero penalty down to ``lambda_min_ratio`` times it.  Every inner fold
    standardizes its own training rows.  The selected penalty minimizes mean
    held-out squared error; ties go to the larger penalty.

    Parameters
    ----------
    penalty : {"lasso", "ridge"}
    grid : sequence of float, optional
        Explicit penalties; overrides ``n_lambda`` and ``lambda_min_ratio``.
    folds : int
        Number of inner folds.
    seed : int
        Seed of the inner fold assignment.
    """

    def __init__(self, penalty="lasso", grid=None, n_lambda=50, lambda_min_ratio=1e-3,
                 folds=5, seed=0, max_sweeps=100_000, tol=1e-7):
        self.penalty = penalty
        self.grid = grid
        self.n_lambda = n_lambda
        self.lambda_min_ratio = lambda_min_ratio
        self.folds = folds
        self.seed = seed
        self.max_sweeps = max_sweeps
        self.tol = tol

    def _lambdas(self, Z, yc):
        if self.grid is not None:
            return np.sort(np.asarray(self.grid, dtype=float))[::-1]
        lmax = lambda_max(Z, yc, self.penalty)
        return lmax * np.logspace(0.0, np.log10(self.lambda_min_ratio), int(self.n_lambda))

    def _path(self, X, y, lambdas):
        Z, mean, scale = standardize(X)
        ybar = float(y.mean())
        betas = penalty_path(Z, y - ybar, lambdas, self.penalty, self.max_sweeps, self.tol)
        coefs = betas / scale
        intercepts = ybar - coefs @ mean
        return coefs, intercepts

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        return self._fit_validated(X, y)

    def _fit_validated(self, X, y):
        self.n_features_in_ = X.shape[1]
        Z, _, _ = standardize(X)
        lambdas = self._lambdas(Z, y - y.mean())
        fold_of = inner_folds(X.shape[0], self.folds, self.seed)
        n_folds = int(fold_of.max()) + 1
        cv_mse = np.zeros(len(lambdas))
        for f in range(n_folds):
            test = fold_of == f
            coefs, intercepts = self._path(X[~test], y[~test], lambdas)
            pred = X[test] @ coefs.T + intercepts
            cv_mse += np.mean((y[test, None] - pred) ** 2, axis=0)
        cv_mse /= n_folds
        best = int(np.argmin(cv_mse))
        coefs, intercepts = self._path(X, y, lambdas[: best + 1])
        self.lambdas_ = lambdas
        self.cv_mse_ = cv_mse
        self.alpha_ = float(lambdas[best])
        self.coef_ = coefs[best]
        self.intercept_ = float(intercepts[best])
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return self._predict_validated(X)

    def _predict_validated(self, X):
        return self.intercept_ + X @ self.coef_
