"""Nested cross-validation inference for the unrestricted-minus-restricted loss.

Each repetition ``r`` draws a fresh treatment-stratified ``K``-fold split.
For every outer fold ``k`` the pair of models is trained on all other folds
and evaluated on fold ``k`` (the outer stream); inside those ``K - 1`` folds
each fold ``j`` is held out in turn, the pair is trained on the remaining
``K - 2`` folds and evaluated on fold ``j`` (the inner stream).  The point
estimate averages inner per-fold mean losses; the outer stream feeds the
plain cross-validation estimate, the bias correction and the MSE estimate.
"""

import csv
import json
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from ._rng import child_seed
from ._validation import check_alpha
from .data import Dataset, ModifiedDataset, compute_modified_outcomes, split_folds
from .exceptions import DegenerateMSEWarning, FoldArmMissing, HTEError, ValidationError
from .learners.fitting import fit_cate, fit_unrestricted
from .learners.spec import LearnerSpec, resolve_learner
from .losses import MODIFIED, OUTCOME, check_mode, pair_predictions
from .losses import diff_sq_loss, modified_diff_sq_loss
from .restricted import fit_restricted, restricted_tau_mo

SCHEMA_VERSION = 1
VARIANCE_METHODS = ("clamped", "plugin")


@dataclass(frozen=True)
class NcvConfig:
    """Nested cross-validation settings.

    Parameters
    ----------
    K : int
        Folds per repetition, at least 3.
    R : int
        Repetitions, each with its own fold assignment.
    alpha_levels : tuple of float
        Levels of the reported intervals; the first is the primary level.
    seed : int
        Master seed; repetition ``r`` uses folds drawn from ``child_seed(seed, r)``.
    mode : {"outcome", "modified", "modified_from_outcome"}
    mse_floor : float
        Lower bound applied to the interval variance.
    variance : {"clamped", "plugin"}
        How the plug-in MSE estimate becomes the interval variance; see
        :func:`interval_variance`.
    """

    K: int = 5
    R: int = 50
    alpha_levels: tuple = (0.05,)
    seed: int = 0
    mode: str = OUTCOME
    mse_floor: float = 1e-12
    variance: str = "clamped"

    def __post_init__(self):
        if int(self.K) < 3:
            raise ValidationError(f"K must be at least 3 for nested cross-validation, got {self.K}")
        if int(self.R) < 1:
            raise ValidationError(f"R must be at least 1, got {self.R}")
        levels = self.alpha_levels
        if np.isscalar(levels):
            levels = (levels,)
        levels = tuple(check_alpha(a) for a in levels)
        if not levels:
            raise ValidationError("at least one alpha level is required")
        check_mode(self.mode)
        if not self.mse_floor > 0:
            raise ValidationError("mse_floor must be positive")
        if self.variance not in VARIANCE_METHODS:
            raise ValidationError(
                f"unknown variance method {self.variance!r}; expected one of {VARIANCE_METHODS}"
            )
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "R", int(self.R))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "alpha_levels", levels)
        object.__setattr__(self, "mse_floor", float(self.mse_floor))

    def to_dict(self):
        return {
            "K": self.K,
            "R": self.R,
            "alpha_levels": list(self.alpha_levels),
            "seed": self.seed,
            "mode": self.mode,
            "mse_floor": self.mse_floor,
            "variance": self.variance,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(**{**obj, "alpha_levels": tuple(obj["alpha_levels"])})


def bias_correction(e_ncv, e_cv, K):
    """Bias estimate ``(1 + (K - 2)/K) * (e_ncv - e_cv)``; returns ``(bias, factor)``."""
    factor = 1.0 + (K - 2) / K
    return factor * (e_ncv - e_cv), factor


def mse_estimate(inner_means, outer_means, outer_vars, outer_sizes):
    """Plug-in MSE of the nested-CV estimate, before flooring.

    ``mean_{r,k} (ebar_in - ebar_out)^2 - mean_{r,k} var_out / n_k`` where
    ``ebar_in`` averages the inner per-fold means of outer split ``(r, k)``
    and ``var_out`` is the sample variance of the fold-``k`` losses.
    """
    ebar_in = inner_means.mean(axis=2)
    return float(np.mean((ebar_in - outer_means) ** 2) - np.mean(outer_vars / outer_sizes))


def interval_variance(raw_mse, K, naive_se, method="clamped"):
    """Variance used for the intervals, before the positivity floor.

    ``"plugin"`` returns ``raw_mse`` unchanged.  ``"clamped"`` rescales it
    by ``(K - 1)/K`` (the nested fits use ``K - 1`` of the ``K`` folds) and
    clamps the resulting standard error to ``[naive_se, sqrt(K) naive_se]``,
    where ``naive_se`` is the standard deviation of the pooled inner losses
    over ``sqrt(n)``.  The clamp guards against the high variance of the
    plug-in difference, which is often near or below zero.
    """
    if method == "plugin":
        return float(raw_mse)
    se = np.sqrt(max(raw_mse, 0.0) * (K - 1) / K)
    se = min(max(se, naive_se), np.sqrt(K) * naive_se)
    return float(se * se)


def pooled_sd(means, variances, sizes):
    """Standard deviation (ddof 1) of the union of groups given per-group summaries."""
    means, variances, sizes = (np.ravel(v) for v in (means, variances, sizes))
    total = sizes.sum()
    if total < 2:
        return 0.0
    grand = float(sizes @ means) / total
    ss = float((sizes - 1) @ variances + sizes @ (means - grand) ** 2)
    return float(np.sqrt(max(ss, 0.0) / (total - 1)))


@dataclass(frozen=True, eq=False)
class NcvResult:
    """Point estimate, bias, MSE and the per-fold statistics they come from.

    ``raw_mse`` is the plug-in MSE estimate (it may be negative); ``mse`` is
    the interval variance derived from it by :func:`interval_variance` and
    floored at ``mse_floor``.

    ``inner_fold_means[r, k, i]`` is the mean loss on inner fold
    ``inner_folds[k][i]`` of outer split ``(r, k)``; ``outer_fold_*`` hold
    the mean, sample variance (ddof 1) and size of the held-out fold ``k``
    losses.
    """

    e_ncv: float
    e_cv: float
    bias: float
    mse: float
    raw_mse: float
    bias_factor: float
    K: int
    R: int
    mse_floor: float
    inner_fold_means: np.ndarray
    inner_fold_sizes: np.ndarray
    inner_fold_vars: np.ndarray
    naive_se: float
    variance: str
    outer_fold_means: np.ndarray
    outer_fold_vars: np.ndarray
    outer_fold_sizes: np.ndarray
    loss_table: list = field(default=None)

    @property
    def center(self):
        return self.e_ncv - self.bias

    @property
    def se(self):
        return float(np.sqrt(self.mse))

    @property
    def n_per_fold(self):
        return self.outer_fold_sizes

    def to_dict(self):
        return {
            "e_ncv": self.e_ncv,
            "e_cv": self.e_cv,
            "bias": self.bias,
            "mse": self.mse,
            "raw_mse": self.raw_mse,
            "bias_factor": self.bias_factor,
            "K": self.K,
            "R": self.R,
            "mse_floor": self.mse_floor,
            "inner_fold_means": self.inner_fold_means.tolist(),
            "inner_fold_sizes": self.inner_fold_sizes.tolist(),
            "inner_fold_vars": self.inner_fold_vars.tolist(),
            "naive_se": self.naive_se,
            "variance": self.variance,
            "outer_fold_means": self.outer_fold_means.tolist(),
            "outer_fold_vars": self.outer_fold_vars.tolist(),
            "outer_fold_sizes": self.outer_fold_sizes.tolist(),
        }

    @classmethod
    def from_dict(cls, obj):
        kw = dict(obj)
        for key in ("inner_fold_means", "inner_fold_vars", "outer_fold_means", "outer_fold_vars"):
            kw[key] = np.asarray(kw[key], dtype=float)
        for key in ("inner_fold_sizes", "outer_fold_sizes"):
            kw[key] = np.asarray(kw[key], dtype=np.int64)
        return cls(**kw)


def _describe_learner(spec):
    if isinstance(spec, LearnerSpec):
        return spec.to_dict()
    return {"family": "custom", "description": getattr(spec, "__name__", repr(spec))}


def resolve_spec(spec):
    """Pass through regressors and pair callables; resolve everything else as a learner."""
    if hasattr(spec, "fit") or (callable(spec) and not isinstance(spec, LearnerSpec)):
        return spec
    return resolve_learner(spec)


def fit_pair(spec, d, m, mode):
    """Train the (unrestricted, restricted) pair on ``d`` for loss ``mode``.

    ``spec`` may be a :class:`LearnerSpec` (or anything
    :func:`resolve_learner` accepts), a scikit-learn regressor used as the
    learner, or a callable ``spec(d, m, mode) -> (f, g)`` returning a custom
    pair.  In ``modified`` mode the pair is a CATE fit to the modified
    outcomes ``m`` and their mean.
    """
    if callable(spec) and not hasattr(spec, "fit"):
        return spec(d, m, mode)
    if mode == MODIFIED:
        return fit_cate(spec, m), restricted_tau_mo(m)
    return fit_unrestricted(spec, d), fit_restricted(spec, d)


def _subset_modified(m, rows):
    if m is None:
        return None
    return ModifiedDataset(m.modified_outcomes[rows], m.covariates[rows], m.propensities[rows])


def _run_task(spec, d, m, mode, train, test, tag, keep):
    try:
        f, g = fit_pair(spec, d.subset(train), _subset_modified(m, train), mode)
        fp, gp, t = pair_predictions(f, g, test, d if mode == OUTCOME else m, mode)
    except HTEError as exc:
        exc.ncv_task = tag
        exc.args = (f"{exc} (nested-CV task r={tag[0]}, k={tag[1]}, j={tag[2]})",)
        raise
    loss = diff_sq_loss(fp, gp, t) if mode == OUTCOME else modified_diff_sq_loss(fp, gp, t)
    detail = (test, fp, gp, t) if keep else None
    return loss, detail


def _check_folds(d, folds):
    for k in range(folds.K):
        a = d.treatments[folds.test_index(k)]
        if not (a == 1).any() or not (a == 0).any():
            raise FoldArmMissing(f"fold {k} (seed {folds.seed}) lacks one treatment arm")


def run_ncv(spec, d, cfg, propensity=None, n_jobs=1, keep_losses=False):
    """Run nested cross-validation and return an :class:`NcvResult`.

    Parameters
    ----------
    spec : LearnerSpec, preset name, scikit-learn regressor or pair callable
        See :func:`fit_pair`.
    d : Dataset
    cfg : NcvConfig
    propensity : float or array, optional
        Treatment probabilities for the modified modes (default 0.5).
    n_jobs : int
        Worker processes; results do not depend on it.
    keep_losses : bool
        Attach the per-observation loss table to the result.
    """
    if not isinstance(d, Dataset):
        raise ValidationError("run_ncv needs a Dataset")
    spec = resolve_spec(spec)
    K, R, mode = cfg.K, cfg.R, cfg.mode
    if d.n < 2 * (K + 1):
        raise ValidationError(f"n={d.n} is too small for K={K}: need at least {2 * (K + 1)} rows")
    m = None
    if mode != OUTCOME:
        m = compute_modified_outcomes(d, 0.5 if propensity is None else propensity)

    jobs, tags = [], []
    for r in range(R):
        folds = split_folds(d, K, child_seed(cfg.seed, r))
        _check_folds(d, folds)
        for k in range(K):
            jobs.append((folds.train_index(k), folds.test_index(k)))
            tags.append((r, k, k))
            for j in range(K):
                if j != k:
                    jobs.append((folds.train_index(k, j), folds.test_index(j)))
                    tags.append((r, k, j))

    if n_jobs == 1:
        out = [_run_task(spec, d, m, mode, tr, te, tag, keep_losses)
               for (tr, te), tag in zip(jobs, tags)]
    else:
        out = Parallel(n_jobs=n_jobs)(
            delayed(_run_task)(spec, d, m, mode, tr, te, tag, keep_losses)
            for (tr, te), tag in zip(jobs, tags)
        )

    inner_means = np.empty((R, K, K - 1))
    inner_sizes = np.empty((R, K, K - 1), dtype=np.int64)
    inner_vars = np.empty((R, K, K - 1))
    outer_means = np.empty((R, K))
    outer_vars = np.empty((R, K))
    outer_sizes = np.empty((R, K), dtype=np.int64)
    table = [] if keep_losses else None
    for (r, k, j), (loss, detail) in zip(tags, out):
        if j == k:
            outer_means[r, k] = loss.mean()
            outer_vars[r, k] = loss.var(ddof=1) if loss.size > 1 else 0.0
            outer_sizes[r, k] = loss.size
        else:
            i = j if j < k else j - 1
            inner_means[r, k, i] = loss.mean()
            inner_vars[r, k, i] = loss.var(ddof=1) if loss.size > 1 else 0.0
            inner_sizes[r, k, i] = loss.size
        if keep_losses:
            rows, fp, gp, t = detail
            stream = "outer" if j == k else "inner"
            table.extend(
                (r, k, j, stream, int(row), float(v), float(a), float(b), float(y))
                for row, v, a, b, y in zip(rows, loss, fp, gp, t)
            )

    e_ncv = float(inner_means.mean())
    e_cv = float(outer_means[0].mean())
    bias, factor = bias_correction(e_ncv, e_cv, K)
    raw = mse_estimate(inner_means, outer_means, outer_vars, outer_sizes)
    naive_se = pooled_sd(inner_means, inner_vars, inner_sizes) / np.sqrt(d.n)
    mse = interval_variance(raw, K, naive_se, cfg.variance)
    if not raw >= cfg.mse_floor or not mse >= cfg.mse_floor:
        warnings.warn(
            f"plug-in nested-CV MSE estimate {raw:.3g} is below {cfg.mse_floor:.3g}; "
            f"using interval variance {max(mse, cfg.mse_floor):.3g}",
            DegenerateMSEWarning,
            stacklevel=2,
        )
        mse = max(mse, cfg.mse_floor)
    return NcvResult(
        e_ncv=e_ncv, e_cv=e_cv, bias=float(bias), mse=float(mse), raw_mse=raw,
        bias_factor=factor, K=K, R=R, mse_floor=cfg.mse_floor,
        inner_fold_means=inner_means, inner_fold_sizes=inner_sizes, inner_fold_vars=inner_vars,
        naive_se=float(naive_se), variance=cfg.variance,
        outer_fold_means=outer_means, outer_fold_vars=outer_vars,
        outer_fold_sizes=outer_sizes, loss_table=table,
    )


LOSS_TABLE_COLUMNS = ("r", "k", "j", "stream", "row", "loss", "f_pred", "g_pred", "target")


def write_loss_table(res, path):
    """Write the per-observation loss table of ``res`` (needs ``keep_losses``)."""
    if res.loss_table is None:
        raise ValidationError("the result carries no loss table; rerun with keep_losses=True")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LOSS_TABLE_COLUMNS)
        for rec in res.loss_table:
            w.writerow([*rec[:5], *(repr(v) for v in rec[5:])])


def confidence_interval(res, alpha):
    """``center -/+ z_{1 - alpha/2} sqrt(mse)`` with ``center = e_ncv - bias``."""
    alpha = check_alpha(alpha)
    half = float(norm.ppf(1.0 - alpha / 2.0)) * res.se
    return res.center - half, res.center + half


def h_value(res):
    """Smallest ``alpha`` whose interval excludes zero: ``2 Phi(-|center| / sqrt(mse))``."""
    return float(2.0 * norm.cdf(-abs(res.center) / res.se))


def one_sided_h_value(res):
    """Smallest ``alpha`` at which the one-sided interval ``(-inf, U_{2 alpha})``
    lies below zero: ``Phi(center / sqrt(mse))``.

    Small values favour the unrestricted model; a negative center gives
    ``h_value / 2`` and a positive one ``1 - h_value / 2``.
    """
    return float(norm.cdf(res.center / res.se))


def _alpha_key(alpha):
    return repr(float(alpha))


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """Nested-CV result with intervals, h-values and provenance."""

    ncv: NcvResult
    intervals: dict
    h_two_sided: float
    h_one_sided: float
    config: dict
    learner: dict
    n: int
    p: int
    wall_time: float = None
    provenance: dict = None

    @property
    def center(self):
        return self.ncv.center

    def interval(self, alpha):
        return self.intervals[float(alpha)]

    def to_dict(self, include_timing=False):
        out = {
            "schema_version": SCHEMA_VERSION,
            "center": self.center,
            "ncv": self.ncv.to_dict(),
            "intervals": {
                _alpha_key(a): {"lower": lo, "upper": hi} for a, (lo, hi) in self.intervals.items()
            },
            "h_two_sided": self.h_two_sided,
            "h_one_sided": self.h_one_sided,
            "config": self.config,
            "learner": self.learner,
            "data": {"n": self.n, "p": self.p},
        }
        if self.provenance is not None:
            out["provenance"] = self.provenance
        if include_timing and self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing=False):
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, obj):
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValidationError(f"unsupported report schema_version {obj.get('schema_version')!r}")
        intervals = {float(k): (v["lower"], v["upper"]) for k, v in obj["intervals"].items()}
        return cls(
            ncv=NcvResult.from_dict(obj["ncv"]),
            intervals=intervals,
            h_two_sided=obj["h_two_sided"],
            h_one_sided=obj["h_one_sided"],
            config=obj["config"],
            learner=obj["learner"],
            n=obj["data"]["n"],
            p=obj["data"]["p"],
            wall_time=obj.get("wall_time"),
            provenance=obj.get("provenance"),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def run_evaluation(spec, d, cfg, propensity=None, n_jobs=1, keep_losses=False):
    """Nested CV followed by intervals at every ``cfg.alpha_levels`` and both h-values."""
    spec = resolve_spec(spec)
    t0 = time.perf_counter()
    res = run_ncv(spec, d, cfg, propensity=propensity, n_jobs=n_jobs, keep_losses=keep_losses)
    intervals = {a: confidence_interval(res, a) for a in cfg.alpha_levels}
    return EvaluationReport(
        ncv=res,
        intervals=intervals,
        h_two_sided=h_value(res),
        h_one_sided=one_sided_h_value(res),
        config=cfg.to_dict(),
        learner=_describe_learner(spec),
        n=d.n,
        p=d.p,
        wall_time=time.perf_counter() - t0,
    )
