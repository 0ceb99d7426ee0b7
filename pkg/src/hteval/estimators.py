"""scikit-learn style front ends.

The regressors take a single feature matrix whose ``treatment_col`` column is
the binary treatment; the remaining columns are covariates.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .data import Dataset
from .learners.fitting import fit_unrestricted
from .learners.spec import resolve_learner
from .nested_cv import NcvConfig, run_evaluation
from .restricted import TauSearch, fit_restricted


def _split(X, treatment_col):
    a = X[:, treatment_col]
    rest = np.delete(X, treatment_col, axis=1)
    return a, rest


class _TreatmentRegressor(RegressorMixin, BaseEstimator):
    def _dataset(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        a, rest = _split(X, self.treatment_col)
        return Dataset(y, a, rest)

    def _predict_input(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False)
        return _split(X, self.treatment_col)


class UnrestrictedRegressor(_TreatmentRegressor):
    """Outcome model with treatment-covariate interactions.

    Parameters
    ----------
    learner : str, dict or LearnerSpec
        Preset name (``"ols"``, ``"ridge"``, ``"lasso"``, ``"boost"``) or a
        learner configuration.
    treatment_col : int
        Column of ``X`` holding the 0/1 treatment.
    """

    def __init__(self, learner="ols", treatment_col=0):
        self.learner = learner
        self.treatment_col = treatment_col

    def fit(self, X, y):
        d = self._dataset(X, y)
        self.model_ = fit_unrestricted(resolve_learner(self.learner), d)
        return self

    def predict(self, X):
        a, rest = self._predict_input(X)
        return self.model_.predict(a, rest)

    def predict_cate(self, X):
        _, rest = self._predict_input(X)
        return self.model_.predict_cate(rest)


class RestrictedRegressor(_TreatmentRegressor):
    """Closest constant-effect counterpart of the learner.

    Fits ``g(A, x) = f_tau(x) + tau A`` with ``tau`` minimizing the in-sample
    squared error of a covariates-only refit to ``Y - tau A``.

    Attributes
    ----------
    tau_star_ : float
    model_ : RestrictedModel
    """

    def __init__(self, learner="ols", treatment_col=0, width=3.0, n_grid=41, rel_tol=1e-5):
        self.learner = learner
        self.treatment_col = treatment_col
        self.width = width
        self.n_grid = n_grid
        self.rel_tol = rel_tol

    def fit(self, X, y):
        d = self._dataset(X, y)
        opts = TauSearch(width=self.width, n_grid=self.n_grid, rel_tol=self.rel_tol)
        self.model_ = fit_restricted(resolve_learner(self.learner), d, opts)
        self.tau_star_ = self.model_.tau_star
        return self

    def predict(self, X):
        a, rest = self._predict_input(X)
        return self.model_.predict(a, rest)


class HTEEvaluator(BaseEstimator):
    """Nested cross-validation comparison of a learner with its restricted form.

    ``fit(X, y, treatment)`` runs the evaluation; X holds covariates only.

    Attributes
    ----------
    report_ : EvaluationReport
    center_ : float
        Bias-corrected estimate of the expected loss difference; negative
        values favour modelling heterogeneous effects.
    interval_ : tuple of float
        Interval at ``alpha``.
    h_value_, h_one_sided_ : float
    """

    def __init__(self, learner="ols", mode="outcome", n_folds=5, n_repeats=50, alpha=0.05,
                 random_state=0, n_jobs=1):
        self.learner = learner
        self.mode = mode
        self.n_folds = n_folds
        self.n_repeats = n_repeats
        self.alpha = alpha
        self.random_state = random_state
        self.n_jobs = n_jobs

    def fit(self, X, y, treatment, propensity=None):
        X, y = validate_data(self, X, y, y_numeric=True, ensure_min_features=0)
        d = Dataset(y, treatment, X)
        cfg = NcvConfig(K=self.n_folds, R=self.n_repeats, alpha_levels=(self.alpha,),
                        seed=int(self.random_state or 0), mode=self.mode)
        self.report_ = run_evaluation(self.learner, d, cfg, propensity=propensity,
                                      n_jobs=self.n_jobs)
        self.center_ = self.report_.center
        self.interval_ = self.report_.intervals[cfg.alpha_levels[0]]
        self.h_value_ = self.report_.h_two_sided
        self.h_one_sided_ = self.report_.h_one_sided
        return self
