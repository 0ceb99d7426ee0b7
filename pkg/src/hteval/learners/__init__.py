from .boosting import RegressionTree, TreeBoostingRegressor
from .constant import MeanRegressor
from .fitting import (
    BASELINE,
    UNRESTRICTED,
    FittedModel,
    build_estimator,
    fit_baseline,
    fit_cate,
    fit_unrestricted,
    predict_outcome,
)
from .linear import LassoRegressor, OLSRegressor, RidgeRegressor
from .spec import PRESETS, LearnerSpec, Tuning, resolve_learner
from .tuning import PenalizedCV

__all__ = [
    "BASELINE",
    "PRESETS",
    "UNRESTRICTED",
    "FittedModel",
    "LassoRegressor",
    "LearnerSpec",
    "MeanRegressor",
    "OLSRegressor",
    "PenalizedCV",
    "RegressionTree",
    "RidgeRegressor",
    "TreeBoostingRegressor",
    "Tuning",
    "build_estimator",
    "fit_baseline",
    "fit_cate",
    "fit_unrestricted",
    "predict_outcome",
    "resolve_learner",
]
