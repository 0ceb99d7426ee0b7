"""Difference-in-squared-error losses between an unrestricted and a restricted fit.

Negative values favour the unrestricted (heterogeneous-effect) model.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_dimension
from .data import Dataset, ModifiedDataset
from .exceptions import ValidationError

OUTCOME = "outcome"
MODIFIED = "modified"
MODIFIED_FROM_OUTCOME = "modified_from_outcome"
MODES = (OUTCOME, MODIFIED, MODIFIED_FROM_OUTCOME)


def check_mode(mode):
    if mode not in MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass(frozen=True)
class LossRecord:
    row_index: int
    loss_value: float
    f_pred: float
    g_pred: float
    y_or_w: float
    mode: str


def diff_sq_loss(f_pred, g_pred, y):
    """``(y - f)^2 - (y - g)^2``; works elementwise on arrays."""
    return (y - f_pred) ** 2 - (y - g_pred) ** 2


def modified_diff_sq_loss(theta_pred, tau_mo, w):
    """``(w - theta)^2 - (w - tau)^2`` for modified outcomes ``w``."""
    return (w - theta_pred) ** 2 - (w - tau_mo) ** 2


def _constant_effect(g, X):
    if np.isscalar(g) or isinstance(g, (np.floating, float, int)):
        return np.full(X.shape[0], float(g))
    return g.predict_cate(X)


def pair_predictions(f, g, rows, data, mode, modified=None):
    """Arrays ``(f_pred, g_pred, target)`` on ``rows`` for loss ``mode``.

    ``outcome``: ``f(A_i, x_i)``, ``g(A_i, x_i)`` and ``Y_i`` from the
    :class:`Dataset` ``data``.  ``modified``: ``theta(x_i)``, the constant
    ``tau`` and ``W_i``, where ``f`` is a CATE model and ``g`` a scalar (or a
    restricted model).  ``modified_from_outcome``: as ``modified`` but with
    ``theta(x) = f(1, x) - f(0, x)`` from an unrestricted outcome model.  In
    the modified modes ``data`` is a :class:`ModifiedDataset`, or a
    :class:`Dataset` accompanied by ``modified``.
    """
    check_mode(mode)
    rows = np.asarray(rows, dtype=np.int64)
    if mode == OUTCOME:
        if not isinstance(data, Dataset):
            raise ValidationError("outcome mode needs a Dataset")
        X = data.covariates[rows]
        a = data.treatments[rows]
        return f.predict(a, X), g.predict(a, X), data.outcomes[rows]
    m = data if isinstance(data, ModifiedDataset) else modified
    if m is None:
        raise ValidationError(f"{mode} mode needs modified outcomes")
    X = check_dimension(m.covariates[rows], f.p)
    return f.predict_cate(X), _constant_effect(g, X), m.modified_outcomes[rows]


def pair_losses(f, g, rows, data, mode, modified=None):
    """Vectorized losses on ``rows``; see :func:`pair_predictions`."""
    fp, gp, t = pair_predictions(f, g, rows, data, mode, modified)
    if mode == OUTCOME:
        return diff_sq_loss(fp, gp, t)
    return modified_diff_sq_loss(fp, gp, t)


def evaluate_pair(f, g, rows, data, mode, modified=None):
    """One :class:`LossRecord` per row of ``rows``.

    The caller guarantees ``f`` and ``g`` were trained without those rows.
    """
    rows = np.asarray(rows, dtype=np.int64)
    fp, gp, t = pair_predictions(f, g, rows, data, mode, modified)
    kind = OUTCOME if mode == OUTCOME else MODIFIED
    loss = diff_sq_loss(fp, gp, t) if kind == OUTCOME else modified_diff_sq_loss(fp, gp, t)
    return [
        LossRecord(int(i), float(v), float(a), float(b), float(y), kind)
        for i, v, a, b, y in zip(rows, loss, fp, gp, t)
    ]
