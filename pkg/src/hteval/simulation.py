"""Synthetic randomized-trial generators, the Monte Carlo estimand oracle and
the coverage-study harness.

Designs
-------
``linear_A`` / ``linear_B``
    Two standard normal covariates and
    ``Y = b0 + b1 x1 + b2 x2 + b3 A + b4 A x1 + b5 A x2 + eps`` with
    ``b = (2, 3, -1, 1.5, 0, 0)`` (no heterogeneity) or
    ``(2, 3, -1, 1.5, 0.5, -2)``.
``mu{1,2,3}_theta{1,2,3,4}``
    Nine covariates, ``x_j`` standard normal for even ``j`` and
    Bernoulli(0.5) for odd ``j`` (1-based), ``Y = mu(x) + A theta(x) + eps``.

Treatment is Bernoulli(0.5) and ``eps`` is normal with sd ``noise_sd``
throughout.
"""

import csv
import json
import re
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from ._rng import child_seed, make_rng
from .data import BINARY, CONTINUOUS, Dataset, compute_modified_outcomes
from .exceptions import HTEError, ValidationError
from .losses import MODIFIED, MODIFIED_FROM_OUTCOME, OUTCOME, check_mode
from .nested_cv import SCHEMA_VERSION, NcvConfig, _describe_learner, fit_pair, resolve_spec
from .nested_cv import run_evaluation

LINEAR_COEFFICIENTS = {
    "linear_A": (2.0, 3.0, -1.0, 1.5, 0.0, 0.0),
    "linear_B": (2.0, 3.0, -1.0, 1.5, 0.5, -2.0),
}

_NONLINEAR = re.compile(r"^mu([123])_theta([1-4])$")


def parse_design(design):
    """Split a design string into ``(kind, mu_id, theta_id)``."""
    design = str(design).strip()
    if design in LINEAR_COEFFICIENTS:
        return design, None, None
    match = _NONLINEAR.match(design)
    if not match:
        raise ValidationError(
            f"unknown design {design!r}: expected linear_A, linear_B or mu<1-3>_theta<1-4>"
        )
    return "nonlinear", int(match.group(1)), int(match.group(2))


def _col(X, j):
    """Covariate ``x_j`` with 1-based ``j``."""
    return X[:, j - 1]


def mu1(X, term4_as_x6=False):
    x2, x4, x6 = _col(X, 2), _col(X, 4), _col(X, 6)
    last = (1 - x6) if term4_as_x6 else (1 - x4)
    return (x2 * x4 * x6 + 2 * x2 * x4 * (1 - x6) + 3 * x2 * (1 - x4) * x6
            + 4 * x2 * (1 - x4) * last
            + 5 * (1 - x2) * x4 * x6 + 6 * (1 - x2) * x4 * (1 - x6)
            + 7 * (1 - x2) * (1 - x4) * x6 + 8 * (1 - x2) * (1 - x4) * (1 - x6))


def mu2(X):
    x = {j: _col(X, j) for j in range(1, 10)}
    return (4.0 * ((x[1] > 1) & (x[3] > 0)) + 4.0 * ((x[5] > 1) & (x[7] > 0))
            + 2.0 * x[8] * x[9])


def mu3(X):
    x = {j: _col(X, j) for j in range(1, 10)}
    return 0.5 * (x[1] ** 2 + x[2] + x[3] ** 2 + x[4] + x[5] ** 2 + x[6] + x[7] ** 2
                  + x[8] + x[9] ** 2 - 11.0)


@dataclass(frozen=True)
class GeneratorSpec:
    """A simulation design together with sample size and seed.

    ``kind`` is ``"linear_A"``, ``"linear_B"`` or ``"nonlinear"`` (with
    ``mu_id`` and ``theta_id``).  ``mu1_term4_as_x6`` replaces the repeated
    ``(1 - x4)`` factor in the fourth product of ``mu1`` with ``(1 - x6)``.
    """

    kind: str
    n: int = 100
    seed: int = 0
    noise_sd: float = 1.0
    mu_id: int = None
    theta_id: int = None
    mu1_term4_as_x6: bool = False

    def __post_init__(self):
        if self.kind in LINEAR_COEFFICIENTS:
            if self.mu_id is not None or self.theta_id is not None:
                raise ValidationError("linear designs take no mu_id/theta_id")
        elif self.kind == "nonlinear":
            if self.mu_id not in (1, 2, 3) or self.theta_id not in (1, 2, 3, 4):
                raise ValidationError(
                    f"invalid nonlinear combination mu{self.mu_id}_theta{self.theta_id}"
                )
        else:
            raise ValidationError(f"unknown generator kind {self.kind!r}")
        if int(self.n) < 1:
            raise ValidationError("n must be positive")
        if not self.noise_sd >= 0:
            raise ValidationError("noise_sd must be nonnegative")

    @classmethod
    def from_design(cls, design, n=100, seed=0, **kw):
        kind, mu_id, theta_id = parse_design(design)
        return cls(kind, n=n, seed=seed, mu_id=mu_id, theta_id=theta_id, **kw)

    @property
    def design(self):
        if self.kind == "nonlinear":
            return f"mu{self.mu_id}_theta{self.theta_id}"
        return self.kind

    @property
    def p(self):
        return 2 if self.kind in LINEAR_COEFFICIENTS else 9

    @property
    def covariate_kinds(self):
        if self.p == 2:
            return (CONTINUOUS, CONTINUOUS)
        return tuple(CONTINUOUS if j % 2 == 0 else BINARY for j in range(1, 10))

    def to_dict(self):
        return {"design": self.design, "n": int(self.n), "seed": int(self.seed),
                "noise_sd": float(self.noise_sd), "mu1_term4_as_x6": bool(self.mu1_term4_as_x6)}

    # ground truth

    def mu(self, X):
        """Control-arm conditional mean ``E[Y | A=0, x]``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind in LINEAR_COEFFICIENTS:
            b = LINEAR_COEFFICIENTS[self.kind]
            return b[0] + b[1] * X[:, 0] + b[2] * X[:, 1]
        if self.mu_id == 1:
            return mu1(X, self.mu1_term4_as_x6)
        return mu2(X) if self.mu_id == 2 else mu3(X)

    def theta(self, X):
        """The design's ITE function.

        For the linear designs this is the interaction part
        ``b4 x1 + b5 x2``; the arm gap also contains the constant ``b3``
        (see :meth:`cate`).
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind in LINEAR_COEFFICIENTS:
            b = LINEAR_COEFFICIENTS[self.kind]
            return b[4] * X[:, 0] + b[5] * X[:, 1]
        t = self.theta_id
        if t == 1:
            return np.zeros(X.shape[0])
        if t == 2:
            return np.ones(X.shape[0])
        if t == 3:
            return 2.0 + 0.1 / (1.0 + np.exp(-_col(X, 2)))
        return mu1(X, self.mu1_term4_as_x6)

    def cate(self, X):
        """Arm gap ``E[Y | A=1, x] - E[Y | A=0, x]``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind in LINEAR_COEFFICIENTS:
            return LINEAR_COEFFICIENTS[self.kind][3] + self.theta(X)
        return self.theta(X)

    def mean(self, a, X):
        """Outcome regression ``E[Y | A=a, x]``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.mu(X) + np.asarray(a, dtype=float) * self.cate(X)

    # sampling

    def draw_covariates(self, rng, m):
        if self.p == 2:
            return rng.standard_normal((m, 2))
        X = np.empty((m, 9))
        for j in range(1, 10):
            X[:, j - 1] = rng.standard_normal(m) if j % 2 == 0 else rng.binomial(1, 0.5, m)
        return X

    def sample(self, rng, m):
        """Draw ``m`` rows; returns ``(X, a, y, mean)`` with ``mean = E[Y | A, x]``."""
        X = self.draw_covariates(rng, m)
        a = rng.binomial(1, 0.5, m).astype(np.int8)
        eps = rng.standard_normal(m) * self.noise_sd
        mean = self.mean(a, X)
        return X, a, mean + eps, mean


def generate(g):
    """Draw the design's dataset of ``g.n`` rows from ``g.seed``.

    Both arms are guaranteed at least two rows: draws are repeated from the
    same stream until they are (this only matters for tiny ``n``).
    """
    rng = make_rng(g.seed, 0)
    for _ in range(1000):
        X, a, y, _ = g.sample(rng, int(g.n))
        if min(int(a.sum()), int((1 - a).sum())) >= 2 or g.n < 4:
            break
    names = tuple(f"x{j}" for j in range(1, g.p + 1))
    return Dataset(y, a, X, names, g.covariate_kinds)


@dataclass(frozen=True)
class OracleValue:
    value: float
    se: float
    m: int


def oracle_estimand(f_like, g_like, g_truth, m=100_000, mode=OUTCOME, seed=0,
                    integrate_noise=True, propensity=0.5):
    """Monte Carlo value of the predictive estimand for a fixed pair of models.

    Draws ``m`` fresh rows from ``g_truth`` and averages the loss of the
    trained models (which are not refit).  ``mode="outcome"`` uses
    ``(Y - f(A, x))^2 - (Y - g(A, x))^2``; the modified modes use
    ``(W - theta(x))^2 - (W - tau)^2`` with fresh modified outcomes ``W``.
    Both losses are linear in the response, so with ``integrate_noise`` the
    response is replaced by its conditional mean given ``(A, x)``, which
    removes the outcome noise from the Monte Carlo error without changing
    the target.

    Returns
    -------
    OracleValue
        Estimate, its Monte Carlo standard error and ``m``.
    """
    check_mode(mode)
    rng = make_rng(seed, 7)
    X, a, y, mean = g_truth.sample(rng, int(m))
    resp = mean if integrate_noise else y
    if mode == OUTCOME:
        fp = f_like.predict(a, X)
        gp = g_like.predict(a, X)
        loss = (gp - fp) * (2.0 * resp - fp - gp)
    else:
        w = np.where(a == 1, resp / propensity, -resp / (1.0 - propensity))
        th = f_like.predict_cate(X)
        tau = np.full(X.shape[0], float(g_like)) if np.isscalar(g_like) or isinstance(
            g_like, (float, np.floating)) else g_like.predict_cate(X)
        loss = (tau - th) * (2.0 * w - th - tau)
    value = float(loss.mean())
    se = float(loss.std(ddof=1) / np.sqrt(loss.size)) if loss.size > 1 else 0.0
    return OracleValue(value, se, int(m))


@dataclass(frozen=True, eq=False)
class CoverageReport:
    replications: int
    mean_estimand: float
    coverage_proportion: float
    mean_ci_width: float
    median_one_sided_h: float
    records: list
    generator: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    learner: dict = field(default_factory=dict)
    oracle_m: int = 0

    RECORD_COLUMNS = ("replication", "data_seed", "ncv_seed", "oracle_seed", "estimand",
                      "estimand_se", "center", "lower", "upper", "covered", "width",
                      "h_one_sided", "h_two_sided")

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "replications": self.replications,
            "mean_estimand": self.mean_estimand,
            "coverage_proportion": self.coverage_proportion,
            "mean_ci_width": self.mean_ci_width,
            "median_one_sided_h": self.median_one_sided_h,
            "records": self.records,
            "generator": self.generator,
            "config": self.config,
            "learner": self.learner,
            "oracle_m": self.oracle_m,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        obj.pop("schema_version", None)
        return cls(**obj)

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(self.RECORD_COLUMNS)
            for rec in self.records:
                w.writerow([rec[c] if not isinstance(rec[c], float) else repr(rec[c])
                            for c in self.RECORD_COLUMNS])


def _replication(i, g, spec, cfg, oracle_m, estimand_fn):
    rep = child_seed(g.seed, i)
    data_seed, ncv_seed, oracle_seed = (child_seed(rep, s) for s in range(3))
    d = generate(replace(g, seed=data_seed))
    try:
        report = run_evaluation(spec, d, replace(cfg, seed=ncv_seed))
        m = None if cfg.mode == OUTCOME else compute_modified_outcomes(d, 0.5)
        f, gfit = fit_pair(spec, d, m, cfg.mode)
        if estimand_fn is None:
            est = oracle_estimand(f, gfit, g, oracle_m, cfg.mode, oracle_seed)
            value, se = est.value, est.se
        else:
            value, se = float(estimand_fn(report, (f, gfit), d)), 0.0
    except HTEError as exc:
        exc.args = (f"{exc} (replication {i})",)
        raise
    lo, hi = report.intervals[cfg.alpha_levels[0]]
    return {
        "replication": i,
        "data_seed": data_seed,
        "ncv_seed": ncv_seed,
        "oracle_seed": oracle_seed,
        "estimand": value,
        "estimand_se": se,
        "center": report.center,
        "lower": lo,
        "upper": hi,
        "covered": bool(lo <= value <= hi),
        "width": hi - lo,
        "h_one_sided": report.h_one_sided,
        "h_two_sided": report.h_two_sided,
    }


def coverage_study(g, spec, cfg, replications=100, oracle_m=100_000, n_jobs=1,
                   estimand_fn=None):
    """Repeat draw / evaluate / oracle over independent replications.

    Replication ``i`` derives its dataset, nested-CV and oracle seeds from
    ``child_seed(g.seed, i)``, so results do not depend on ``n_jobs``.
    Coverage is judged at the first level of ``cfg.alpha_levels``.

    ``estimand_fn(report, pair, d)``, if given, replaces the Monte Carlo
    oracle (used to test the harness itself).
    """
    spec = resolve_spec(spec)
    if int(replications) < 1:
        raise ValidationError("replications must be at least 1")
    idx = range(int(replications))
    if n_jobs == 1:
        records = [_replication(i, g, spec, cfg, oracle_m, estimand_fn) for i in idx]
    else:
        records = Parallel(n_jobs=n_jobs)(
            delayed(_replication)(i, g, spec, cfg, oracle_m, estimand_fn) for i in idx
        )
    est = np.array([r["estimand"] for r in records])
    return CoverageReport(
        replications=len(records),
        mean_estimand=float(est.mean()),
        coverage_proportion=float(np.mean([r["covered"] for r in records])),
        mean_ci_width=float(np.mean([r["width"] for r in records])),
        median_one_sided_h=float(np.median([r["h_one_sided"] for r in records])),
        records=records,
        generator=g.to_dict(),
        config=cfg.to_dict(),
        learner=_describe_learner(spec),
        oracle_m=int(oracle_m),
    )


__all__ = [
    "LINEAR_COEFFICIENTS",
    "CoverageReport",
    "GeneratorSpec",
    "MODIFIED",
    "MODIFIED_FROM_OUTCOME",
    "NcvConfig",
    "OracleValue",
    "coverage_study",
    "generate",
    "mu1",
    "mu2",
    "mu3",
    "oracle_estimand",
    "parse_design",
]
