"""Unrestricted, baseline and CATE fits of a learner family.

Every family is used through two feature layouts:

* unrestricted: treatment enters the features.  Linear families (ols, ridge,
  lasso) use ``[x, A, A*x]`` with an intercept, boosting uses ``[A, x]`` and
  lets the trees split on ``A``, constant uses ``[A]`` and returns arm means.
* baseline: covariates ``x`` only; the treatment value is ignored.
"""

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, clone

from .._validation import check_dimension
from ..exceptions import DimensionMismatch
from .boosting import TreeBoostingRegressor
from .constant import MeanRegressor
from .linear import LassoRegressor, OLSRegressor, RidgeRegressor
from .spec import LearnerSpec, resolve_learner
from .tuning import PenalizedCV

UNRESTRICTED = "unrestricted"
BASELINE = "baseline"


def build_estimator(spec, kind):
    """Fresh, unfitted scikit-learn regressor for ``spec`` in layout ``kind``."""
    if isinstance(spec, BaseEstimator):
        return clone(spec)
    hp = spec.hyperparameters
    fam = spec.family
    if fam == "ols":
        return OLSRegressor(collinear=hp["collinear"])
    if fam in ("ridge", "lasso"):
        extra = {"max_sweeps": hp["max_sweeps"], "tol": hp["tol"]} if fam == "lasso" else {}
        if spec.tuning.kind == "inner_cv":
            return PenalizedCV(
                penalty=fam,
                grid=spec.tuning.grid,
                n_lambda=hp["n_lambda"],
                lambda_min_ratio=hp["lambda_min_ratio"],
                folds=spec.tuning.folds,
                seed=spec.tuning_seed,
                **extra,
            )
        if fam == "lasso":
            return LassoRegressor(alpha=float(hp["penalty"]), **extra)
        return RidgeRegressor(alpha=float(hp["penalty"]))
    if fam == "boosting":
        return TreeBoostingRegressor(
            n_iter=hp["n_iter"],
            learning_rate=hp["learning_rate"],
            max_depth=hp["max_depth"],
            min_samples_leaf=hp["min_samples_leaf"],
        )
    return MeanRegressor(by_first_column=(kind == UNRESTRICTED))


def _layout(spec):
    if isinstance(spec, BaseEstimator):
        return "tree"
    return {"ols": "linear", "ridge": "linear", "lasso": "linear",
            "boosting": "tree", "constant": "arm"}[spec.family]


def expand(layout, kind, a, X):
    """Feature matrix for ``layout`` ("linear", "tree", "arm") and ``kind``."""
    if kind == BASELINE:
        return X
    a = np.broadcast_to(np.asarray(a, dtype=float), (X.shape[0],))
    if layout == "linear":
        return np.hstack([X, a[:, None], a[:, None] * X])
    if layout == "tree":
        return np.hstack([a[:, None], X])
    return a[:, None].copy()


def _meta(est, family, layout, kind, p):
    meta = {"family": family, "kind": kind}
    if hasattr(est, "coef_"):
        coef = np.concatenate([[est.intercept_], est.coef_])
        meta["coefficients"] = [float(c) for c in coef]
        if kind == UNRESTRICTED and layout == "linear":
            meta["coefficient_layout"] = "[1, x, A, A*x]"
    if hasattr(est, "alpha_"):
        meta["selected_penalty"] = float(est.alpha_)
    elif family in ("ridge", "lasso") and hasattr(est, "alpha"):
        meta["selected_penalty"] = float(est.alpha)
    if hasattr(est, "trees_"):
        meta["boosting_iterations"] = len(est.trees_)
    if getattr(est, "dropped_", ()):
        meta["dropped_columns"] = list(est.dropped_)
    return meta


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A trained regressor together with the feature layout it was trained on.

    ``predict(a, X)`` accepts a scalar or per-row treatment ``a`` and an
    ``(m, p)`` matrix (or a single length-``p`` vector).  Baseline models
    ignore ``a``.
    """

    estimator: object
    family: str
    kind: str
    layout: str
    p: int
    training_meta: dict = field(default_factory=dict)

    def predict(self, a, X):
        X = check_dimension(X, self.p)
        Z = expand(self.layout, self.kind, a, X)
        if hasattr(self.estimator, "_predict_validated"):
            return self.estimator._predict_validated(Z)
        return self.estimator.predict(Z)

    def predict_cate(self, X):
        """``f(1, x) - f(0, x)`` for unrestricted models, the fit itself for CATE models."""
        if self.kind == BASELINE:
            return self.predict(0, X)
        return self.predict(1, X) - self.predict(0, X)


def _fit(spec, kind, X, y, a=None):
    spec = spec if isinstance(spec, BaseEstimator) else resolve_learner(spec)
    layout = _layout(spec)
    est = build_estimator(spec, kind)
    Z = expand(layout, kind, a, X)
    if hasattr(est, "_fit_validated"):
        # Dataset construction already guarantees finite float inputs
        est._fit_validated(np.ascontiguousarray(Z, dtype=float), np.asarray(y, dtype=float))
    else:
        est.fit(Z, y)
    family = "custom" if isinstance(spec, BaseEstimator) else spec.family
    return FittedModel(est, family, kind, layout, X.shape[1], _meta(est, family, layout, kind, X.shape[1]))


def fit_unrestricted(spec, d):
    """Fit ``Y ~ (A, x)`` with treatment-covariate interactions allowed."""
    return _fit(spec, UNRESTRICTED, d.covariates, d.outcomes, d.treatments)


def fit_baseline(spec, m):
    """Fit the covariates-only model to a shifted-outcomes dataset."""
    return _fit(spec, BASELINE, m.covariates, m.outcomes)


def fit_cate(spec, m):
    """Fit modified outcomes ``W ~ x``; the fit is a direct CATE estimate."""
    return _fit(spec, BASELINE, m.covariates, m.modified_outcomes)


def predict_outcome(f, a, x):
    """Fitted value of model ``f`` at a single treatment value and covariate vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatch(f.p, x.shape[-1] if x.ndim else 0)
    return float(f.predict(a, x)[0])


__all__ = [
    "BASELINE",
    "UNRESTRICTED",
    "FittedModel",
    "LearnerSpec",
    "build_estimator",
    "expand",
    "fit_baseline",
    "fit_cate",
    "fit_unrestricted",
    "predict_outcome",
]
