"""Input validation helpers shared by the data, learner and engine layers."""

import numbers

import numpy as np

from .exceptions import (
    DimensionMismatch,
    InvalidPropensity,
    InvalidTreatmentValue,
    TooFewRowsPerArm,
    ValidationError,
)


def check_outcomes(y, n=None):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValidationError(f"outcomes must be one-dimensional, got shape {y.shape}")
    if n is not None and y.shape[0] != n:
        raise ValidationError(f"expected {n} outcomes, got {y.shape[0]}")
    if not np.all(np.isfinite(y)):
        raise ValidationError("outcomes contain missing or non-finite values")
    return y


def check_treatment(a, n=None):
    """Return ``a`` as an int8 array of zeros and ones.

    Raises ``InvalidTreatmentValue`` naming the first offending (1-based) row.
    """
    arr = np.asarray(a)
    if arr.ndim != 1:
        raise ValidationError(f"treatment must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ValidationError(f"expected {n} treatment values, got {arr.shape[0]}")
    with np.errstate(invalid="ignore"):
        bad = ~((arr == 0) | (arr == 1))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InvalidTreatmentValue(i + 1, arr[i].item())
    return arr.astype(np.int8)


def check_covariates(X, n=None):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValidationError(f"covariates must be a 2-D matrix, got shape {X.shape}")
    if n is not None and X.shape[0] != n:
        raise ValidationError(f"expected {n} covariate rows, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("covariates contain missing or non-finite values")
    return X


def check_dimension(X, p):
    """Coerce ``X`` to a 2-D float matrix with ``p`` columns."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        if X.shape[0] != p:
            raise DimensionMismatch(p, X.shape[0])
        return X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != p:
        raise DimensionMismatch(p, X.shape[-1] if X.ndim else 0)
    return X


def check_propensity(p, n):
    """Broadcast a scalar or per-row propensity to length ``n``; all values in (0, 1)."""
    if isinstance(p, numbers.Real) or np.ndim(p) == 0:
        value = float(p)
        if not 0.0 < value < 1.0:
            raise InvalidPropensity(1, value)
        return np.full(n, value)
    arr = np.asarray(p, dtype=float)
    if arr.shape != (n,):
        raise ValidationError(f"expected {n} propensities, got shape {arr.shape}")
    bad = ~((arr > 0.0) & (arr < 1.0))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InvalidPropensity(i + 1, float(arr[i]))
    return arr


def check_arm_counts(a, minimum):
    for arm in (1, 0):
        count = int(np.sum(a == arm))
        if count < minimum:
            raise TooFewRowsPerArm(arm, count, minimum)


def check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValidationError("alpha must be in (0,1)")
    return alpha
