"""Declarative learner descriptions and their JSON form."""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..exceptions import ValidationError

FAMILIES = ("ols", "ridge", "lasso", "boosting", "constant")

DEFAULT_HYPERPARAMETERS = {
    "ols": {"collinear": "drop"},
    "ridge": {"penalty": None, "n_lambda": 50, "lambda_min_ratio": 1e-3},
    "lasso": {"penalty": None, "n_lambda": 50, "lambda_min_ratio": 1e-3,
              "max_sweeps": 100_000, "tol": 1e-7},
    "boosting": {"n_iter": 100, "learning_rate": 0.1, "max_depth": 2, "min_samples_leaf": 5},
    "constant": {},
}


@dataclass(frozen=True)
class Tuning:
    """``fixed`` hyperparameters, or ``inner_cv`` penalty selection.

    ``grid=None`` under ``inner_cv`` means the automatic penalty sequence.
    """

    kind: str = "fixed"
    folds: int = 5
    grid: tuple = None

    def __post_init__(self):
        if self.kind not in ("fixed", "inner_cv"):
            raise ValidationError(f"unknown tuning kind {self.kind!r}")
        if self.kind == "inner_cv":
            if int(self.folds) < 2:
                raise ValidationError("inner_cv folds must be at least 2")
            if self.grid is not None:
                grid = tuple(float(g) for g in self.grid)
                if not grid or any(g <= 0 for g in grid):
                    raise ValidationError("inner_cv grid must be nonempty and strictly positive")
                object.__setattr__(self, "grid", grid)

    def to_dict(self):
        if self.kind == "fixed":
            return {"kind": "fixed"}
        grid = None if self.grid is None else list(self.grid)
        return {"kind": "inner_cv", "folds": int(self.folds), "grid": grid}


@dataclass(frozen=True)
class LearnerSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    tuning: Tuning = field(default_factory=Tuning)
    tuning_seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        unknown = set(self.hyperparameters) - set(DEFAULT_HYPERPARAMETERS[self.family])
        if unknown:
            raise ValidationError(f"unknown hyperparameters for {self.family}: {sorted(unknown)}")
        merged = {**DEFAULT_HYPERPARAMETERS[self.family], **self.hyperparameters}
        object.__setattr__(self, "hyperparameters", merged)
        if isinstance(self.tuning, dict):
            object.__setattr__(self, "tuning", Tuning(**self.tuning))
        if self.family in ("ridge", "lasso"):
            if self.tuning.kind == "fixed":
                pen = merged.get("penalty")
                if pen is None or float(pen) < 0:
                    raise ValidationError(f"fixed {self.family} needs a nonnegative 'penalty'")
        elif self.tuning.kind != "fixed":
            raise ValidationError(f"family {self.family} has no tunable penalty")

    def __hash__(self):
        return hash(self.to_json())

    def to_dict(self):
        return {
            "family": self.family,
            "hyperparameters": dict(sorted(self.hyperparameters.items())),
            "tuning": self.tuning.to_dict(),
            "seeds": {"tuning_seed": int(self.tuning_seed)},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj):
        if "family" not in obj:
            raise ValidationError("learner configuration needs a 'family' key")
        extra = set(obj) - {"family", "hyperparameters", "tuning", "seeds"}
        if extra:
            raise ValidationError(f"unknown learner configuration keys: {sorted(extra)}")
        tuning = obj.get("tuning") or {"kind": "fixed"}
        if obj["family"] in ("ridge", "lasso") and "tuning" not in obj:
            tuning = {"kind": "inner_cv", "folds": 5, "grid": None}
        seeds = obj.get("seeds") or {}
        return cls(
            family=obj["family"],
            hyperparameters=dict(obj.get("hyperparameters") or {}),
            tuning=Tuning(**tuning),
            tuning_seed=int(seeds.get("tuning_seed", 0)),
        )

    @classmethod
    def from_json(cls, text):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid learner JSON: {exc}") from None
        return cls.from_dict(obj)


PRESETS = {
    "ols": LearnerSpec("ols"),
    "ridge": LearnerSpec("ridge", tuning=Tuning("inner_cv", 5, None)),
    "lasso": LearnerSpec("lasso", tuning=Tuning("inner_cv", 5, None)),
    "boost": LearnerSpec("boosting"),
    "boosting": LearnerSpec("boosting"),
    "constant": LearnerSpec("constant"),
}


def resolve_learner(value):
    """Accept a preset name, a JSON object string, a path to a JSON file, or a spec."""
    if isinstance(value, LearnerSpec):
        return value
    if isinstance(value, dict):
        return LearnerSpec.from_dict(value)
    text = str(value).strip()
    if text in PRESETS:
        return PRESETS[text]
    if text.startswith("{"):
        return LearnerSpec.from_json(text)
    path = Path(text)
    if path.is_file():
        return LearnerSpec.from_json(path.read_text(encoding="utf-8"))
    raise ValidationError(
        f"unknown learner {text!r}: expected a preset ({', '.join(sorted(PRESETS))}), "
        "a JSON object or a JSON file"
    )
