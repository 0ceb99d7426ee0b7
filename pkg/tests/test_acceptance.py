"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline;
they are also written to the terminal summary.
"""

import json
import time
import warnings

import numpy as np
import pytest
from scipy.stats import norm

from hteval import (
    Dataset,
    GeneratorSpec,
    LearnerSpec,
    NcvConfig,
    closed_form_tau_linear_scalar,
    compute_modified_outcomes,
    confidence_interval,
    coverage_study,
    estimate_tau_star,
    fit_restricted,
    fit_unrestricted,
    generate,
    h_value,
    modified_diff_sq_loss,
    one_sided_h_value,
    restricted_tau_mo,
    run_evaluation,
    run_ncv,
)
from hteval._rng import make_rng
from hteval.exceptions import DegenerateMSEWarning
from hteval.learners.fitting import fit_cate

from oracles import arm_vs_pooled, brute_force_ncv
from test_nested_cv import fixture_result

pytestmark = pytest.mark.acceptance

RESULTS = []


def verdict(criterion, ok, detail, started):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({time.time() - started:.1f}s) {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def scalar_dataset(rng, n):
    x = rng.normal(size=n) * rng.uniform(0.5, 3)
    a = rng.permutation(np.r_[np.ones(n // 2), np.zeros(n - n // 2)])
    y = rng.normal() + rng.normal() * x + rng.normal() * a + rng.normal() * a * x
    y = y + rng.normal(size=n) * rng.uniform(0.2, 2)
    return Dataset(y, a, x[:, None])


def test_criterion_1_closed_form_equivalence():
    t0 = time.time()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for i in range(200):
        d = scalar_dataset(rng, (20, 100)[i % 2])
        tau, _ = estimate_tau_star("ols", d)
        cf = closed_form_tau_linear_scalar(d)
        D = np.column_stack([np.ones(d.n), d.covariates[:, 0], d.treatments])
        ols = np.linalg.lstsq(D, d.outcomes, rcond=None)[0][2]
        worst = max(worst, abs(tau - cf), abs(tau - ols), abs(cf - ols))
    elapsed = time.time() - t0
    verdict(1, worst < 1e-6 and elapsed < 60,
            f"max |tau* - closed form|, |tau* - OLS| = {worst:.2e} (tol 1e-6)", t0)


def test_criterion_2_structural_zero_hte():
    t0 = time.time()
    rng = np.random.default_rng(7)
    checked, exact_gap, worst_ulps = 0, 0, 0.0
    ok = True
    for family in ("ols", "ridge", "lasso", "boost", "constant"):
        for i in range(50):
            n = int(rng.integers(40, 81))
            X = rng.normal(size=(n, 2))
            a = rng.permutation(np.r_[np.ones(n // 2), np.zeros(n - n // 2)])
            y = 1 + X @ rng.normal(size=2) + a * (0.5 + X[:, 0] * rng.normal()) + rng.normal(size=n)
            g = fit_restricted(family, Dataset(y, a, X))
            Xq = rng.normal(size=(100, 2)) * 2
            p0, p1 = g.predict(0, Xq), g.predict(1, Xq)
            base = g.predict_baseline(Xq)
            gap = p1 - p0
            ulps = np.abs(gap - g.tau_star) / np.spacing(np.maximum(np.abs(p0), np.abs(p1)))
            ok &= bool(np.array_equal(p0, base) and np.array_equal(p1, base + g.tau_star)
                       and np.all(g.predict_cate(Xq) == g.tau_star) and ulps.max() <= 2)
            exact_gap += int(np.sum(gap == g.tau_star))
            worst_ulps = max(worst_ulps, float(ulps.max()))
            checked += 100
    elapsed = time.time() - t0
    verdict(2, ok and elapsed < 300,
            f"{checked} points over 5 families: baseline identical across arms, predict = "
            f"baseline + tau*, cate = tau*; gap bit-equal to tau* at {exact_gap}, "
            f"else within {worst_ulps:.0f} ulp of the last addition", t0)


def coverage(design, n, reps, R, seed):
    g = GeneratorSpec.from_design(design, n=n, seed=seed)
    return coverage_study(g, "ols", NcvConfig(K=5, R=R), replications=reps, oracle_m=100_000)


@pytest.mark.slow
def test_criterion_3_linear_settings_coverage():
    t0 = time.time()
    a = coverage("linear_A", 100, 100, 20, 1)
    b = coverage("linear_B", 100, 100, 20, 2)
    checks = {
        "A coverage >= 0.93": a.coverage_proportion >= 0.93,
        "A mean in 0.022 +/- 0.05": abs(a.mean_estimand - 0.022) <= 0.05,
        "A median h in [0.40, 0.90]": 0.40 <= a.median_one_sided_h <= 0.90,
        "B mean in [-1.40, -0.85]": -1.40 <= b.mean_estimand <= -0.85,
        "B coverage >= 0.90": b.coverage_proportion >= 0.90,
        "B median h <= 0.01": b.median_one_sided_h <= 0.01,
    }
    failed = [k for k, v in checks.items() if not v]
    detail = (f"A: coverage {a.coverage_proportion:.3f}, mean {a.mean_estimand:.4f}, "
              f"median h {a.median_one_sided_h:.3f}, width {a.mean_ci_width:.3f} | "
              f"B: coverage {b.coverage_proportion:.3f}, mean {b.mean_estimand:.4f}, "
              f"median h {b.median_one_sided_h:.2e}, width {b.mean_ci_width:.3f}")
    if failed:
        detail += " | failed: " + "; ".join(failed)
    verdict(3, not failed and time.time() - t0 < 1800, detail, t0)


@pytest.mark.slow
def test_criterion_4_nonlinear_spot_check():
    t0 = time.time()
    r = coverage("mu2_theta3", 500, 60, 10, 3)
    ok = -0.10 <= r.mean_estimand <= 0.05 and r.coverage_proportion >= 0.90
    verdict(4, ok and time.time() - t0 < 2700,
            f"mu2 x theta3: mean {r.mean_estimand:.4f} (want [-0.10, 0.05]), "
            f"coverage {r.coverage_proportion:.3f} (want >= 0.90)", t0)


def test_criterion_5_modified_loss_identity():
    t0 = time.time()
    pairs = []
    gb = GeneratorSpec.from_design("linear_B", n=200, seed=5)
    db = generate(gb)
    f = fit_unrestricted("ols", db)
    pairs.append(("ols outcome model, tau*", gb, lambda X, f=f: f.predict_cate(X),
                  fit_restricted("ols", db).tau_star))
    mb = compute_modified_outcomes(db, 0.5)
    c = fit_cate("lasso", mb)
    pairs.append(("lasso on modified outcomes, mean W", gb, lambda X, c=c: c.predict_cate(X),
                  restricted_tau_mo(mb)))
    gn = GeneratorSpec.from_design("mu3_theta3", n=300, seed=6)
    dn = generate(gn)
    h = fit_unrestricted("boost", dn)
    pairs.append(("boosting on mu3 x theta3, tau*", gn, lambda X, h=h: h.predict_cate(X),
                  fit_restricted("boost", dn).tau_star))
    zs = []
    for i, (_, g, theta_hat, tau) in enumerate(pairs):
        X, a, y, _ = g.sample(make_rng(99, i), 1_000_000)
        w = np.where(a == 1, 2.0 * y, -2.0 * y)
        th_hat = theta_hat(X)
        theta = g.cate(X)
        lhs = modified_diff_sq_loss(th_hat, tau, w)
        rhs = (theta - th_hat) ** 2 - (theta - tau) ** 2
        se = np.sqrt(lhs.var(ddof=1) / lhs.size + rhs.var(ddof=1) / rhs.size)
        zs.append(abs(lhs.mean() - rhs.mean()) / se)
    ok = max(zs) < 4 and time.time() - t0 < 120
    verdict(5, ok, "|MC mean of modified loss - MSE-difference form| / combined SE = "
            + ", ".join(f"{z:.2f}" for z in zs) + " (want < 4)", t0)


def test_criterion_6_ncv_arithmetic():
    t0 = time.time()
    rng = np.random.default_rng(6)
    a = np.array([0, 1] * 10)
    d = Dataset(1.0 + 0.8 * a + rng.normal(size=20), a, rng.normal(size=(20, 1)))
    worst = 0.0
    for variance in ("clamped", "plugin"):
        cfg = NcvConfig(K=4, R=1, seed=3, variance=variance, mse_floor=1e-300)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateMSEWarning)
            res = run_ncv(arm_vs_pooled, d, cfg)
        ref = brute_force_ncv(d, 4, 1, 3)
        for key in ("e_ncv", "e_cv", "bias", "raw_mse"):
            worst = max(worst, abs(getattr(res, key) - ref[key]))
        worst = max(worst, abs(res.mse - max(ref[variance], 1e-300)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMSEWarning)
        const = run_ncv("constant", d, NcvConfig(K=4, R=1, seed=3))
    degenerate = abs(const.e_ncv) < 1e-12 and const.mse == const.mse_floor
    verdict(6, worst < 1e-10 and degenerate and time.time() - t0 < 1,
            f"max deviation from brute-force triple sum (e_ncv, e_cv, bias, raw and interval "
            f"mse) = {worst:.1e}; constant family e_ncv={const.e_ncv:.1e}, mse at floor", t0)


def test_criterion_7_h_value_consistency():
    t0 = time.time()
    rng = np.random.default_rng(77)
    flips, relation = 0, 0.0
    fixtures = 0
    while fixtures < 100:
        e, b = rng.normal(0, 1), rng.normal(0, 0.1)
        se = rng.uniform(0.2, 2.0)
        res = fixture_result(e, b, se * se)
        h, h1 = h_value(res), one_sided_h_value(res)
        if not 1e-5 < h < 1 - 1e-5:
            continue
        fixtures += 1
        lo, hi = confidence_interval(res, h + 1e-6)
        excl = not lo <= 0 <= hi
        lo, hi = confidence_interval(res, h - 1e-6)
        flips += int(excl and lo <= 0 <= hi)
        expected = h / 2 if res.center < 0 else 1 - h / 2
        relation = max(relation, abs(h1 - expected),
                       abs(h - 2 * norm.cdf(-abs(res.center) / res.se)))
    verdict(7, flips == 100 and relation <= 1e-12,
            f"containment of 0 flips at h for {flips}/100 fixtures; max one/two-sided "
            f"relation error {relation:.1e}", t0)


def test_criterion_8_determinism():
    t0 = time.time()
    same = 0
    for seed in range(10):
        d = generate(GeneratorSpec.from_design("linear_B", n=40, seed=100 + seed))
        cfg = NcvConfig(K=3, R=2, seed=seed, alpha_levels=(0.05, 0.2))
        one = run_evaluation("ols", d, cfg, n_jobs=1).to_json()
        eight = run_evaluation("ols", d, cfg, n_jobs=8).to_json()
        same += int(one == eight)
    verdict(8, same == 10, f"identical report JSON with 1 and 8 workers on {same}/10 seeds", t0)


def test_criterion_9_lasso_degenerate_mse():
    t0 = time.time()
    d = generate(GeneratorSpec.from_design("linear_A", n=100, seed=9))
    spec = LearnerSpec("lasso", {"penalty": 1e6})
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = run_evaluation(spec, d, NcvConfig(K=5, R=3, mode="modified"))
    warned = any(issubclass(w.category, DegenerateMSEWarning) for w in caught)
    res = rep.ncv
    lo, hi = rep.intervals[0.05]
    finite = all(np.isfinite(v) for v in (res.e_ncv, res.mse, lo, hi, rep.h_two_sided,
                                          rep.h_one_sided))
    json.loads(rep.to_json())
    ok = warned and finite and res.raw_mse <= res.mse_floor and res.mse == res.mse_floor
    verdict(9, ok, f"raw_mse={res.raw_mse:.2e}, mse={res.mse:.0e} (floor), warning={warned}, "
            f"interval width {hi - lo:.1e}, h={rep.h_two_sided:.3f}", t0)
