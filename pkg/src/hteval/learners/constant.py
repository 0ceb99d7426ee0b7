import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data


class MeanRegressor(RegressorMixin, BaseEstimator):
    """Predicts the training mean, or with ``by_first_column=True`` the mean
    within each distinct value of the first column (arm means when that column
    is the treatment indicator)."""

    def __init__(self, by_first_column=False):
        self.by_first_column = by_first_column

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True, ensure_min_features=0)
        return self._fit_validated(X, y)

    def _fit_validated(self, X, y):
        self.n_features_in_ = X.shape[1]
        self.mean_ = float(y.mean())
        self.group_means_ = {}
        if self.by_first_column:
            for g in np.unique(X[:, 0]):
                self.group_means_[float(g)] = float(y[X[:, 0] == g].mean())
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False, ensure_min_features=0)
        return self._predict_validated(X)

    def _predict_validated(self, X):
        if not self.by_first_column:
            return np.full(X.shape[0], self.mean_)
        return np.array([self.group_means_.get(float(g), self.mean_) for g in X[:, 0]])
