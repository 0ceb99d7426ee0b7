"""Command-line interface: ``hteval evaluate | simulate | pdp | hdist | generate``.

Exit status is 0 on success, 2 on invalid input and 1 on runtime failure.
"""

import argparse
import csv
import json
import os
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from ._rng import child_seed
from .data import load_csv
from .diagnostics import covariate_index, default_grid, h_value_distribution, partial_dependence
from .exceptions import HTEError, ValidationError
from .learners.fitting import fit_unrestricted
from .learners.spec import resolve_learner
from .losses import MODES
from .nested_cv import VARIANCE_METHODS, NcvConfig, confidence_interval, run_evaluation
from .nested_cv import write_loss_table
from .restricted import fit_restricted
from .simulation import GeneratorSpec, coverage_study, generate


def _alphas(text):
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise ValidationError("alpha must be in (0,1)") from None


def _jobs(value):
    if value is None or value <= 0:
        return os.cpu_count() or 1
    return value


def _propensity(text):
    """Scalar propensity, or ``None`` when ``text`` names a column."""
    if text is None:
        return None, None
    try:
        return float(text), None
    except ValueError:
        return None, text


def _load(args):
    scalar, column = _propensity(getattr(args, "propensity", None))
    d, prop = load_csv(args.data, args.outcome, args.treatment, column)
    return d, (prop if column else scalar)


def _config(args):
    return NcvConfig(K=args.k, R=args.reps, alpha_levels=_alphas(args.alpha), seed=args.seed,
                     mode=args.mode, variance=args.variance)


def _write_text(path, text):
    Path(path).write_text(text, encoding="utf-8")


def cmd_evaluate(args):
    cfg = _config(args)
    d, prop = _load(args)
    spec = resolve_learner(args.learner)
    rep = run_evaluation(spec, d, cfg, propensity=prop, n_jobs=_jobs(args.jobs),
                         keep_losses=bool(args.losses_out))
    rep = replace(rep, provenance={
        "outcome": args.outcome,
        "treatment": args.treatment,
        "propensity": args.propensity,
        "covariates": list(d.covariate_names),
    })
    _write_text(args.out, rep.to_json(include_timing=args.timing))
    if args.losses_out:
        write_loss_table(rep.ncv, args.losses_out)
    lo, hi = confidence_interval(rep.ncv, 0.05)
    print(f"center={rep.center:.6g} 95% CI=({lo:.6g}, {hi:.6g}) one-sided h={rep.h_one_sided:.4g}")
    return 0


def cmd_simulate(args):
    g = GeneratorSpec.from_design(args.design, n=args.n, seed=args.seed, noise_sd=args.noise_sd,
                                  mu1_term4_as_x6=args.mu1_term4_as_x6)
    cfg = NcvConfig(K=args.k, R=args.reps, alpha_levels=_alphas(args.alpha), seed=args.seed,
                    mode=args.mode, variance=args.variance)
    rep = coverage_study(g, resolve_learner(args.learner), cfg, args.replications,
                         args.oracle_m, n_jobs=_jobs(args.jobs))
    _write_text(args.out, rep.to_json())
    csv_out = args.csv_out or str(Path(args.out).with_suffix(".csv"))
    rep.to_csv(csv_out)
    print(f"design={g.design} n={g.n} replications={rep.replications} "
          f"mean_estimand={rep.mean_estimand:.4g} coverage={rep.coverage_proportion:.3f} "
          f"mean_width={rep.mean_ci_width:.4g} median_h={rep.median_one_sided_h:.4g}")
    return 0


def cmd_pdp(args):
    d, _ = _load(args)
    k = covariate_index(d, args.covariate)
    spec = resolve_learner(args.learner)
    model = fit_restricted(spec, d) if args.model == "restricted" else fit_unrestricted(spec, d)
    grid = default_grid(d, k, args.points) if args.grid is None else [
        float(t) for t in args.grid.split(",")]
    c0 = partial_dependence(model, d, k, grid, a=0)
    c1 = partial_dependence(model, d, k, grid, a=1)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["covariate", "u", "rho_a0", "rho_a1", "gap"])
        for (u, r0), (_, r1) in zip(c0, c1):
            w.writerow([d.covariate_names[k], repr(float(u)), repr(float(r0)), repr(float(r1)),
                        repr(float(r1 - r0))])
    print(f"wrote {len(c0)} grid points for {d.covariate_names[k]} to {args.out}")
    return 0


def cmd_hdist(args):
    cfg = _config(args)
    d, prop = _load(args)
    h = h_value_distribution(resolve_learner(args.learner), d, cfg, args.draws,
                             propensity=prop, n_jobs=_jobs(args.jobs))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["draw", "seed", "h_one_sided"])
        for i, v in enumerate(h):
            w.writerow([i, cfg.seed if i == 0 else child_seed(cfg.seed, i), repr(float(v))])
    print(f"wrote {len(h)} h-values to {args.out}")
    return 0


def cmd_generate(args):
    g = GeneratorSpec.from_design(args.design, n=args.n, seed=args.seed, noise_sd=args.noise_sd,
                                  mu1_term4_as_x6=args.mu1_term4_as_x6)
    generate(g).to_csv(args.out)
    print(f"wrote {g.n} rows of {g.design} to {args.out}")
    return 0


def _add_data(p, propensity=True):
    p.add_argument("--data", required=True, help="input CSV with a header row")
    p.add_argument("--outcome", required=True, help="outcome column")
    p.add_argument("--treatment", required=True, help="0/1 treatment column")
    if propensity:
        p.add_argument("--propensity", default=None,
                       help="propensity column name or a scalar in (0,1) (default 0.5)")


def _add_ncv(p, reps=50):
    p.add_argument("--learner", default="ols",
                   help="preset (ols, ridge, lasso, boost), JSON object or JSON file")
    p.add_argument("--mode", default="outcome", choices=MODES)
    p.add_argument("--k", type=int, default=5, help="folds per repetition")
    p.add_argument("--reps", type=int, default=reps, help="nested-CV repetitions")
    p.add_argument("--alpha", default="0.05", help="comma-separated levels, e.g. 0.05,0.2")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--variance", default="clamped", choices=VARIANCE_METHODS)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")


def _add_design(p):
    p.add_argument("--design", required=True, help="linear_A, linear_B or mu<1-3>_theta<1-4>")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--mu1-term4-as-x6", action="store_true",
                   help="use (1 - x6) in the fourth product of mu1")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hteval",
        description="Nested cross-validation evaluation of heterogeneous treatment effect models.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="evaluate a learner on a CSV dataset")
    _add_data(p)
    _add_ncv(p)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--losses-out", default=None, help="per-observation loss table CSV")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="coverage study on a simulation design")
    _add_design(p)
    _add_ncv(p, reps=20)
    p.add_argument("--replications", type=int, default=100)
    p.add_argument("--oracle-m", type=int, default=100_000)
    p.add_argument("--out", required=True, help="coverage report JSON path")
    p.add_argument("--csv-out", default=None, help="per-replication CSV (default: OUT with .csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("pdp", help="partial dependence of a fitted model on one covariate")
    _add_data(p, propensity=False)
    p.add_argument("--learner", default="ols")
    p.add_argument("--model", choices=("unrestricted", "restricted"), default="unrestricted")
    p.add_argument("--covariate", required=True, help="covariate column name")
    p.add_argument("--grid", default=None, help="comma-separated grid values")
    p.add_argument("--points", type=int, default=25, help="default grid size")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_pdp)

    p = sub.add_parser("hdist", help="one-sided h-values over repeated fold draws")
    _add_data(p)
    _add_ncv(p)
    p.add_argument("--draws", type=int, default=50)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_hdist)

    p = sub.add_parser("generate", help="write a simulated dataset to CSV")
    _add_design(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except (ValidationError, FileNotFoundError, IsADirectoryError, json.JSONDecodeError) as exc:
        print(f"hteval {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (HTEError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"hteval {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
