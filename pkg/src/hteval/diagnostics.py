"""Partial-dependence curves and resampled h-value distributions."""

from dataclasses import replace

import numpy as np

from ._rng import child_seed
from ._validation import check_dimension
from .data import BINARY
from .exceptions import DimensionMismatch, ValidationError
from .nested_cv import resolve_spec, run_evaluation


def default_grid(d, k, n_points=25):
    """``{0, 1}`` for a binary covariate, otherwise ``n_points`` equally spaced
    values between its 2nd and 98th percentiles."""
    col = d.covariates[:, k]
    if d.covariate_kinds[k] == BINARY:
        return np.array([0.0, 1.0])
    lo, hi = np.percentile(col, [2.0, 98.0])
    return np.linspace(lo, hi, int(n_points))


def covariate_index(d, k):
    """Resolve a covariate name or index to a column index."""
    if isinstance(k, str):
        if k not in d.covariate_names:
            raise ValidationError(f"unknown covariate {k!r}; have {list(d.covariate_names)}")
        return d.covariate_names.index(k)
    k = int(k)
    if not 0 <= k < d.p:
        raise ValidationError(f"covariate index {k} out of range for p={d.p}")
    return k


def partial_dependence(model, d, k, grid=None, a=1):
    """Average prediction with covariate ``k`` pinned to each grid value.

    ``rho_k(a, u) = mean_i model.predict(a, x_i with x_ik = u)``.

    Returns
    -------
    ndarray of shape (len(grid), 2)
        Rows ``(u, rho_k(a, u))``.
    """
    k = covariate_index(d, k)
    if getattr(model, "p", d.p) != d.p:
        raise DimensionMismatch(model.p, d.p)
    X = check_dimension(d.covariates, d.p)
    grid = default_grid(d, k) if grid is None else np.asarray(grid, dtype=float).ravel()
    n, m = X.shape[0], grid.shape[0]
    big = np.tile(X, (m, 1))
    big[:, k] = np.repeat(grid, n)
    if hasattr(model, "predict_baseline") and hasattr(model, "tau_star"):
        # restricted model: average the baseline, then add the constant effect
        base = np.asarray(model.predict_baseline(big), dtype=float).reshape(m, n).mean(axis=1)
        return np.column_stack([grid, base + model.tau_star * float(a)])
    pred = np.asarray(model.predict(a, big), dtype=float).reshape(m, n)
    return np.column_stack([grid, pred.mean(axis=1)])


def h_value_distribution(spec, d, cfg, draws, propensity=None, n_jobs=1):
    """One-sided h-values of ``draws`` nested-CV runs that differ only in fold seeds.

    Draw 0 uses ``cfg.seed`` itself, so a single draw reproduces
    ``run_evaluation(spec, d, cfg)``; draw ``i > 0`` uses ``child_seed(cfg.seed, i)``.
    """
    draws = int(draws)
    if draws < 1:
        raise ValidationError("draws must be at least 1")
    spec = resolve_spec(spec)
    out = []
    for i in range(draws):
        seed = cfg.seed if i == 0 else child_seed(cfg.seed, i)
        rep = run_evaluation(spec, d, replace(cfg, seed=seed), propensity=propensity, n_jobs=n_jobs)
        out.append(rep.h_one_sided)
    return np.array(out)
