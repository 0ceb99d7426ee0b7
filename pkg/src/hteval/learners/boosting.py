"""Least-squares gradient boosting with small regression trees."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data


class _Presorted:
    """Per-column sort order of a training matrix, shared by every tree."""

    def __init__(self, X):
        self.X = X
        self.order = np.argsort(X, axis=0, kind="stable")
        self.Xs = np.take_along_axis(X, self.order, axis=0)
        # a split after sorted position i is admissible only between distinct values
        self.distinct = self.Xs[:-1] < self.Xs[1:]


def _best_split(ps, r, mask, min_leaf):
    """Best variance-reduction split of the rows in ``mask``.

    Ties in gain are resolved toward the lower feature index, then the lower
    threshold.  Returns ``(feature, threshold)`` or ``None``.
    """
    n, p = ps.X.shape
    if n < 2 or p == 0:
        return None
    m = mask[ps.order]
    s = np.cumsum(np.where(m, r[ps.order], 0.0), axis=0)
    c = np.cumsum(m, axis=0)
    N = c[-1, 0]
    S = s[-1, 0]
    if N < 2 * min_leaf:
        return None
    nl = c[:-1]
    sl = s[:-1]
    nr = N - nl
    sr = S - sl
    ok = ps.distinct & (nl >= min_leaf) & (nr >= min_leaf)
    if not ok.any():
        return None
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = np.where(ok, sl * sl / nl + sr * sr / nr, -np.inf)
    flat = gain.T.ravel()
    best = int(np.argmax(flat))
    if not np.isfinite(flat[best]) or flat[best] - S * S / N <= 0.0:
        return None
    f, i = divmod(best, n - 1)
    left = ps.Xs[i, f]
    col = ps.X[:, f]
    right = col[mask & (col > left)].min()
    thr = left + (right - left) / 2.0
    if not thr < right:
        thr = left
    return f, float(thr)


class RegressionTree:
    """Least-squares regression tree grown depth-first to ``max_depth``.

    Nodes are stored in flat arrays; leaves have ``feature == -1``.
    """

    def __init__(self, max_depth=2, min_samples_leaf=5):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, r, presorted=None):
        ps = presorted if presorted is not None else _Presorted(np.asarray(X, dtype=float))
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        leaf_of = np.empty(r.shape[0], dtype=np.int64)
        self._grow(ps, r, np.ones(r.shape[0], dtype=bool), 0, leaf_of)
        self.feature = np.array(self.feature)
        self.threshold = np.array(self.threshold)
        self.left = np.array(self.left)
        self.right = np.array(self.right)
        self.value = np.array(self.value)
        self.train_leaf_ = leaf_of
        return self

    def _grow(self, ps, r, mask, depth, leaf_of):
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(r[mask].mean()))
        split = None
        if depth < self.max_depth:
            split = _best_split(ps, r, mask, self.min_samples_leaf)
        if split is None:
            leaf_of[mask] = node
            return node
        f, thr = split
        go_left = ps.X[:, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow(ps, r, mask & go_left, depth + 1, leaf_of)
        self.right[node] = self._grow(ps, r, mask & ~go_left, depth + 1, leaf_of)
        return node

    def apply(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        for _ in range(self.max_depth):
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            x = X[np.arange(X.shape[0]), np.where(inner, f, 0)]
            nxt = np.where(x <= self.threshold[node], self.left[node], self.right[node])
            node = np.where(inner, nxt, node)
        return node

    def predict(self, X):
        return self.value[self.apply(np.asarray(X, dtype=float))]


class TreeBoostingRegressor(RegressorMixin, BaseEstimator):
    """Gradient boosting for squared error.

    Starts from the training mean and adds ``n_iter`` trees of depth
    ``max_depth``, each fit to the current residuals and scaled by
    ``learning_rate``.  Fitting is deterministic: tree splits are chosen by
    exhaustive search with fixed tie-breaking.
    """

    def __init__(self, n_iter=100, learning_rate=0.1, max_depth=2, min_samples_leaf=5):
        self.n_iter = n_iter
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        return self._fit_validated(X, y)

    def _fit_validated(self, X, y):
        self.n_features_in_ = X.shape[1]
        ps = _Presorted(X)
        self.init_ = float(y.mean())
        F = np.full(y.shape[0], self.init_)
        self.trees_ = []
        self.train_mse_ = [float(np.mean((y - F) ** 2))]
        for _ in range(int(self.n_iter)):
            tree = RegressionTree(self.max_depth, self.min_samples_leaf).fit(X, y - F, ps)
            F = F + self.learning_rate * tree.value[tree.train_leaf_]
            self.trees_.append(tree)
            self.train_mse_.append(float(np.mean((y - F) ** 2)))
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return self._predict_validated(X)

    def _predict_validated(self, X):
        F = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            F = F + self.learning_rate * tree.predict(X)
        return F
