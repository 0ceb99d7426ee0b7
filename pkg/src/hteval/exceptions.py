"""Exception hierarchy.

Validation errors (bad input, caller mistakes) subclass ``ValueError``;
fitting and optimization failures subclass ``RuntimeError``.  The CLI maps
the former to exit code 2 and the latter to exit code 1.
"""


class HTEError(Exception):
    """Base class for all package errors."""


class ValidationError(HTEError, ValueError):
    """Raised when inputs violate a documented precondition."""


class MissingColumn(ValidationError):
    def __init__(self, column):
        self.column = column
        super().__init__(f"column {column!r} not found in header")


class NonNumericCell(ValidationError):
    def __init__(self, row, column, value=None):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"non-numeric value {value!r} at row {row}, column {column!r}")


class MissingValue(ValidationError):
    def __init__(self, row, column):
        self.row = row
        self.column = column
        super().__init__(f"missing value at row {row}, column {column!r}")


class InvalidTreatmentValue(ValidationError):
    def __init__(self, row, value=None):
        self.row = row
        self.value = value
        super().__init__(f"treatment must be 0 or 1, got {value!r} at row {row}")


class InvalidPropensity(ValidationError):
    def __init__(self, row, value=None):
        self.row = row
        self.value = value
        super().__init__(f"propensity must lie strictly inside (0, 1), got {value!r} at row {row}")


class TooFewRowsPerArm(ValidationError):
    def __init__(self, arm, count, required):
        self.arm = arm
        self.count = count
        self.required = required
        super().__init__(f"treatment arm {arm} has {count} rows, at least {required} required")


class FoldArmMissing(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} covariates, got {got}")


class DegenerateDesign(ValidationError):
    pass


class FitError(HTEError, RuntimeError):
    """Raised when a learner or optimizer cannot produce a fit."""


class SingularDesign(FitError):
    pass


class NonConvergence(FitError):
    def __init__(self, iterations, message=None):
        self.iterations = iterations
        super().__init__(message or f"no convergence after {iterations} iterations")


class OptimizerBoundaryHit(FitError):
    def __init__(self, tau, lower, upper):
        self.tau = tau
        self.lower = lower
        self.upper = upper
        super().__init__(
            f"restricted SSE minimized at bracket edge tau={tau:.6g} of [{lower:.6g}, {upper:.6g}]"
        )


class CollinearityWarning(UserWarning):
    """Emitted when exactly collinear design columns are dropped."""


class DegenerateMSEWarning(UserWarning):
    """Emitted when the nested-CV MSE estimate is floored."""
