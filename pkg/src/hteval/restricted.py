"""The constant-effect restricted estimator ``g(A, x) = f_tau*(x) + tau* A``.

For a treatment shift ``tau`` the learner is refit to covariates only on the
shifted responses ``Y - tau*A``; ``tau*`` minimizes the in-sample squared
error of that construction.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_dimension
from .data import shift_outcomes
from .exceptions import DegenerateDesign, OptimizerBoundaryHit, ValidationError
from .learners.fitting import FittedModel, fit_baseline
from .optimize import grid_golden_minimize


@dataclass(frozen=True)
class TauSearch:
    """Options of the ``tau*`` search.

    The bracket is ``center +/- width * scale``; ``center`` defaults to the
    difference in arm means and ``scale`` to the pooled within-arm standard
    deviation of the outcome.  When the grid minimum sits on an edge the search
    is repeated once with ``retry_width``.
    """

    width: float = 3.0
    retry_width: float = 6.0
    n_grid: int = 41
    rel_tol: float = 1e-5
    center: float = None
    scale: float = None


def difference_in_means(d):
    a = d.treatments == 1
    return float(d.outcomes[a].mean() - d.outcomes[~a].mean())


def pooled_sd(d):
    """Pooled within-arm standard deviation of the outcome.

    Falls back to the overall standard deviation, then to 1, when the pooled
    value is zero or undefined.
    """
    y = d.outcomes
    a = d.treatments == 1
    n1, n0 = int(a.sum()), int((~a).sum())
    if n1 + n0 > 2:
        ss = np.sum((y[a] - y[a].mean()) ** 2) + np.sum((y[~a] - y[~a].mean()) ** 2)
        s = math.sqrt(ss / (n1 + n0 - 2))
        if s > 0 and math.isfinite(s):
            return s
    s = float(np.std(y, ddof=1)) if y.shape[0] > 1 else 0.0
    return s if s > 0 and math.isfinite(s) else 1.0


def restricted_sse(spec, d, tau):
    """In-sample ``sum_i (Y_i - tau A_i - f_tau(x_i))^2`` with ``f_tau`` refit at ``tau``."""
    m = shift_outcomes(d, tau)
    f = fit_baseline(spec, m)
    r = m.outcomes - f.predict(0, m.covariates)
    return float(r @ r)


def estimate_tau_star(spec, d, opts=None):
    """Minimize :func:`restricted_sse` over a bracket around the difference in means.

    Returns
    -------
    tau_star : float
    trace : list of (tau, sse)
        Every evaluation of every attempt, in evaluation order.

    Raises
    ------
    OptimizerBoundaryHit
        If the grid minimum lies on the bracket edge even after widening.
    """
    opts = opts or TauSearch()
    center = difference_in_means(d) if opts.center is None else float(opts.center)
    s = pooled_sd(d) if opts.scale is None else float(opts.scale)
    trace = []
    for width in (opts.width, opts.retry_width):
        lo, hi = center - width * s, center + width * s
        res = grid_golden_minimize(
            lambda t: restricted_sse(spec, d, t), lo, hi, opts.n_grid, opts.rel_tol * s
        )
        trace.extend(res.trace)
        if not res.at_edge:
            return res.x, trace
    raise OptimizerBoundaryHit(res.x, lo, hi)


@dataclass(frozen=True, eq=False)
class RestrictedModel:
    """Baseline fit on ``M_tau*`` plus the constant treatment effect ``tau*``.

    ``predict(a, X) = baseline(X) + tau_star * a``; the baseline term does
    not depend on ``a``, so the arm gap is ``tau_star`` up to the rounding of
    one addition.
    """

    baseline: FittedModel
    tau_star: float
    sse_at_tau_star: float
    optimizer_trace: tuple = ()

    @property
    def p(self):
        return self.baseline.p

    def predict_baseline(self, X):
        return self.baseline.predict(0, X)

    def predict(self, a, X):
        X = check_dimension(X, self.p)
        a = np.broadcast_to(np.asarray(a, dtype=float), (X.shape[0],))
        return self.predict_baseline(X) + self.tau_star * a

    def predict_cate(self, X):
        X = check_dimension(X, self.p)
        return np.full(X.shape[0], self.tau_star)

    def trace_to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "sse"])
            for t, v in self.optimizer_trace:
                w.writerow([repr(float(t)), repr(float(v))])


def fit_restricted(spec, d, opts=None):
    """Fit the restricted estimator: search ``tau*`` then refit the baseline there."""
    tau, trace = estimate_tau_star(spec, d, opts)
    m = shift_outcomes(d, tau)
    baseline = fit_baseline(spec, m)
    r = m.outcomes - baseline.predict(0, m.covariates)
    return RestrictedModel(baseline, float(tau), float(r @ r), tuple(trace))


def closed_form_tau_linear_scalar(d):
    """``tau*`` for least squares on one covariate, from centered cross-moments.

    With ``S_xx = sum (x - xbar)^2`` and ``C_uv = sum (u - ubar) v / S_xx``::

        tau* = (C_ay - C_xa C_xy) / (C_aa - C_xa^2)

    which equals the coefficient of ``A`` in the least-squares fit ``Y ~ 1 + x + A``.
    """
    if d.p != 1:
        raise ValidationError(f"closed form needs exactly one covariate, got {d.p}")
    x = d.covariates[:, 0]
    a = d.treatments.astype(float)
    y = d.outcomes
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DegenerateDesign("covariate has no variance")
    c_aa = float((a - a.mean()) @ a) / sxx
    c_xa = float(xc @ a) / sxx
    c_ay = float((y - y.mean()) @ a) / sxx
    c_xy = float(xc @ y) / sxx
    den = c_aa - c_xa * c_xa
    if abs(den) < 1e-12:
        raise DegenerateDesign(f"C_aa - C_xa^2 = {den:.3g} is numerically zero")
    return (c_ay - c_xa * c_xy) / den


def restricted_tau_mo(m):
    """Constant fit to modified outcomes: their mean."""
    w = np.asarray(m.modified_outcomes, dtype=float)
    if w.size == 0:
        raise ValidationError("modified-outcome dataset is empty")
    return float(w.mean())
