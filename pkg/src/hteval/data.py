"""Datasets, CSV ingestion, outcome transformations and fold assignment."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import make_rng
from ._validation import (
    check_arm_counts,
    check_covariates,
    check_outcomes,
    check_propensity,
    check_treatment,
)
from .exceptions import (
    InvalidPropensity,
    InvalidTreatmentValue,
    MissingColumn,
    MissingValue,
    NonNumericCell,
    ValidationError,
)

CONTINUOUS = "continuous"
BINARY = "binary"

_MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def infer_kinds(X):
    """Tag each column ``binary`` iff its values are a subset of {0, 1}."""
    kinds = []
    for j in range(X.shape[1]):
        col = X[:, j]
        kinds.append(BINARY if np.all((col == 0) | (col == 1)) else CONTINUOUS)
    return tuple(kinds)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Rows of (outcome, binary treatment, covariate vector).

    Arrays are copied and marked read-only on construction.
    """

    outcomes: np.ndarray
    treatments: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple = None
    covariate_kinds: tuple = None

    def __post_init__(self):
        y = check_outcomes(self.outcomes)
        n = y.shape[0]
        a = check_treatment(self.treatments, n)
        X = check_covariates(self.covariates, n)
        names = self.covariate_names
        if names is None:
            names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
        names = tuple(str(s) for s in names)
        if len(names) != X.shape[1]:
            raise ValidationError(f"{len(names)} covariate names for {X.shape[1]} columns")
        kinds = self.covariate_kinds
        kinds = infer_kinds(X) if kinds is None else tuple(kinds)
        object.__setattr__(self, "outcomes", _frozen(y))
        object.__setattr__(self, "treatments", _frozen(a))
        object.__setattr__(self, "covariates", _frozen(X))
        object.__setattr__(self, "covariate_names", names)
        object.__setattr__(self, "covariate_kinds", kinds)

    @property
    def n(self):
        return self.outcomes.shape[0]

    @property
    def p(self):
        return self.covariates.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows)
        return Dataset(
            self.outcomes[rows],
            self.treatments[rows],
            self.covariates[rows],
            self.covariate_names,
            self.covariate_kinds,
        )

    def to_csv(self, path, outcome_col="y", treatment_col="a"):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow([outcome_col, treatment_col, *self.covariate_names])
            for i in range(self.n):
                writer.writerow(
                    [repr(float(self.outcomes[i])), int(self.treatments[i]),
                     *(repr(float(v)) for v in self.covariates[i])]
                )


@dataclass(frozen=True, eq=False)
class CovariateDataset:
    """Shifted outcomes ``Y - tau * A`` with covariates only; no treatment column."""

    outcomes: np.ndarray
    covariates: np.ndarray
    tau: float

    @property
    def n(self):
        return self.outcomes.shape[0]


@dataclass(frozen=True, eq=False)
class ModifiedDataset:
    """Inverse-propensity signed outcomes with ``E[W | x] = theta(x)``."""

    modified_outcomes: np.ndarray
    covariates: np.ndarray
    propensities: np.ndarray

    @property
    def n(self):
        return self.modified_outcomes.shape[0]


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of: np.ndarray
    K: int
    seed: int = field(default=0)

    def test_index(self, k):
        return np.flatnonzero(self.fold_of == k)

    def train_index(self, *exclude):
        return np.flatnonzero(~np.isin(self.fold_of, exclude))

    def sizes(self):
        return np.bincount(self.fold_of, minlength=self.K)


def _parse_cell(raw, row, col):
    token = raw.strip()
    if token.lower() in _MISSING_TOKENS:
        raise MissingValue(row, col)
    try:
        value = float(token)
    except ValueError:
        raise NonNumericCell(row, col, raw) from None
    if not math.isfinite(value):
        raise NonNumericCell(row, col, raw)
    return value


def load_csv(path, outcome_col, treatment_col, propensity_col=None):
    """Read a header-first UTF-8 CSV into a :class:`Dataset`.

    Every column other than the outcome, treatment and (optional) propensity
    column becomes a covariate, in file order.  Row numbers in error messages
    are 1-based and count data rows only.

    Returns
    -------
    (Dataset, propensity) where ``propensity`` is ``None`` unless
    ``propensity_col`` was given.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValidationError(f"{path}: empty file, header row required") from None
        required = [outcome_col, treatment_col] + ([propensity_col] if propensity_col else [])
        for col in required:
            if col not in header:
                raise MissingColumn(col)
        rows = []
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise ValidationError(
                    f"row {r} has {len(record)} fields, header has {len(header)}"
                )
            rows.append([_parse_cell(c, r, header[j]) for j, c in enumerate(record)])

    if not rows:
        raise ValidationError(f"{path}: no data rows")
    table = np.array(rows, dtype=float)
    idx = {name: j for j, name in enumerate(header)}
    a = table[:, idx[treatment_col]]
    bad = ~((a == 0) | (a == 1))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise InvalidTreatmentValue(i + 1, a[i])
    prop = None
    if propensity_col:
        prop = table[:, idx[propensity_col]]
        bad = ~((prop > 0) & (prop < 1))
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise InvalidPropensity(i + 1, prop[i])
    skip = set(required)
    cov_cols = [c for c in header if c not in skip]
    X = table[:, [idx[c] for c in cov_cols]] if cov_cols else np.empty((len(rows), 0))
    d = Dataset(table[:, idx[outcome_col]], a.astype(np.int8), X, tuple(cov_cols))
    return d, prop


def shift_outcomes(d, tau):
    """Build the shifted-outcomes dataset (responses ``Y - tau*A``, treatment dropped)."""
    tau = float(tau)
    return CovariateDataset(d.outcomes - tau * d.treatments, d.covariates, tau)


def compute_modified_outcomes(d, propensity=0.5):
    """Modified outcomes ``Y/p`` on treated rows and ``-Y/(1-p)`` on control rows."""
    p = check_propensity(propensity, d.n)
    y = d.outcomes
    w = np.where(d.treatments == 1, y / p, -y / (1.0 - p))
    return ModifiedDataset(_frozen(w), d.covariates, _frozen(p))


def split_folds(d, K, seed):
    """Treatment-stratified random partition of the rows into ``K`` folds.

    Each arm is shuffled and the two shuffled arms are dealt round-robin into
    a random permutation of fold labels, so fold sizes differ by at most one
    both overall and within each arm.
    """
    K = int(K)
    if K < 2:
        raise ValidationError(f"K must be at least 2, got {K}")
    a = np.asarray(d.treatments if isinstance(d, Dataset) else d)
    check_arm_counts(a, K)
    rng = make_rng(seed, 0)
    order = np.concatenate([rng.permutation(np.flatnonzero(a == 1)),
                            rng.permutation(np.flatnonzero(a == 0))])
    labels = rng.permutation(K)
    fold_of = np.empty(a.shape[0], dtype=np.int64)
    fold_of[order] = labels[np.arange(order.shape[0]) % K]
    return FoldAssignment(_frozen(fold_of), K, int(seed))
