import csv
import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from hteval import (
    Dataset,
    EvaluationReport,
    LearnerSpec,
    NcvConfig,
    NcvResult,
    confidence_interval,
    h_value,
    one_sided_h_value,
    run_evaluation,
    run_ncv,
)
from hteval.exceptions import DegenerateMSEWarning, FitError, FoldArmMissing, ValidationError
from hteval.nested_cv import bias_correction, interval_variance, mse_estimate, write_loss_table

from conftest import make_dataset
from oracles import arm_vs_pooled, brute_force_ncv


def fixture_result(e_ncv, bias, mse, K=5, R=1):
    z = np.zeros((R, K, K - 1))
    return NcvResult(
        e_ncv=e_ncv, e_cv=e_ncv - bias / (1 + (K - 2) / K), bias=bias, mse=mse, raw_mse=mse,
        bias_factor=1 + (K - 2) / K, K=K, R=R, mse_floor=1e-12,
        inner_fold_means=z, inner_fold_sizes=z.astype(np.int64) + 4, inner_fold_vars=z,
        naive_se=0.0, variance="plugin", outer_fold_means=z[..., 0], outer_fold_vars=z[..., 0],
        outer_fold_sizes=z[..., 0].astype(np.int64) + 4,
    )


def twenty_rows(seed=0):
    rng = np.random.default_rng(seed)
    a = np.array([0, 1] * 10)
    y = 1.0 + 0.8 * a + rng.normal(size=20)
    return Dataset(y, a, rng.normal(size=(20, 1)))


def test_config_validation():
    with pytest.raises(ValidationError):
        NcvConfig(K=2)
    with pytest.raises(ValidationError):
        NcvConfig(R=0)
    with pytest.raises(ValidationError, match=r"alpha must be in \(0,1\)"):
        NcvConfig(alpha_levels=(1.5,))
    with pytest.raises(ValidationError):
        NcvConfig(variance="bootstrap")
    cfg = NcvConfig(alpha_levels=(0.05, 0.2), seed=3)
    assert NcvConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_interval_examples():
    res = fixture_result(-1.0, 0.0, 0.04)
    lo, hi = confidence_interval(res, 0.05)
    assert lo == pytest.approx(-1.0 - 1.959964 * 0.2, abs=1e-6)
    assert hi == pytest.approx(-1.0 + 1.959964 * 0.2, abs=1e-6)
    assert (round(lo, 3), round(hi, 3)) == (-1.392, -0.608)
    lo, hi = confidence_interval(res, 1 - 1e-12)
    assert hi - lo < 1e-10
    lo, hi = confidence_interval(fixture_result(0.0, 0.0, 1e-12), 0.05)
    assert hi - lo == pytest.approx(2 * 1.959964 * 1e-6, rel=1e-6)


def test_h_value_examples():
    assert h_value(fixture_result(0.0, 0.0, 1.0)) == 1.0
    assert h_value(fixture_result(-1.0, 0.0, 0.04)) == pytest.approx(5.733e-7, rel=1e-3)
    assert h_value(fixture_result(1.0, 0.0, 0.04)) == h_value(fixture_result(-1.0, 0.0, 0.04))
    assert one_sided_h_value(fixture_result(0.0, 0.0, 1.0)) == 0.5
    neg, pos = fixture_result(-0.3, 0.0, 0.04), fixture_result(0.3, 0.0, 0.04)
    assert one_sided_h_value(neg) == pytest.approx(h_value(neg) / 2, abs=1e-15)
    assert one_sided_h_value(pos) == pytest.approx(1 - h_value(pos) / 2, abs=1e-15)


@given(st.floats(-3, 3), st.floats(-0.5, 0.5), st.floats(1e-3, 4.0),
       st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_interval_nesting_and_center(e, b, mse, a1, a2):
    res = fixture_result(e, b, mse)
    lo1, hi1 = confidence_interval(res, min(a1, a2))
    lo2, hi2 = confidence_interval(res, max(a1, a2))
    assert lo1 <= lo2 <= hi2 <= hi1
    assert (lo1 + hi1) / 2 == pytest.approx(e - b, abs=1e-12)
    assert hi1 - (e - b) == pytest.approx(norm.ppf(1 - min(a1, a2) / 2) * np.sqrt(mse), rel=1e-9)


@given(st.floats(-2, 2), st.floats(0.05, 2.0))
def test_h_value_flip(center, se):
    res = fixture_result(center, 0.0, se * se)
    h = h_value(res)
    if 1e-5 < h < 1 - 1e-5:
        lo, hi = confidence_interval(res, h + 1e-6)
        assert not lo <= 0 <= hi
        lo, hi = confidence_interval(res, h - 1e-6)
        assert lo <= 0 <= hi


def test_bias_and_mse_helpers():
    bias, factor = bias_correction(0.3, 0.1, 5)
    assert factor == 1.6 and bias == pytest.approx(0.32)
    inner = np.array([[[1.0, 3.0], [0.0, 2.0], [2.0, 2.0]]])
    outer_m = np.array([[1.0, 2.0, 0.0]])
    outer_v = np.array([[2.0, 2.0, 2.0]])
    sizes = np.array([[2, 2, 2]])
    assert mse_estimate(inner, outer_m, outer_v, sizes) == pytest.approx((1 + 1 + 4) / 3 - 1.0)
    assert interval_variance(-0.5, 5, 0.1, "plugin") == -0.5
    assert interval_variance(-0.5, 5, 0.1) == pytest.approx(0.01)
    assert interval_variance(10.0, 5, 0.1) == pytest.approx(0.05)
    assert interval_variance(0.03, 5, 0.1) == pytest.approx(0.024)


@pytest.mark.parametrize("variance", ["clamped", "plugin"])
@pytest.mark.parametrize("R", [1, 2])
def test_arithmetic_matches_brute_force(variance, R):
    d = twenty_rows()
    cfg = NcvConfig(K=4, R=R, seed=5, variance=variance, mse_floor=1e-300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMSEWarning)
        res = run_ncv(arm_vs_pooled, d, cfg)
    ref = brute_force_ncv(d, 4, R, 5)
    for key in ("e_ncv", "e_cv", "bias", "raw_mse", "naive_se"):
        assert getattr(res, key) == pytest.approx(ref[key], abs=1e-10), key
    assert res.mse == pytest.approx(max(ref[variance], 1e-300), abs=1e-10)


def test_identical_estimators_degenerate():
    d = make_dataset(n=30, seed=2)

    def same(dd, m, mode):
        from oracles import ArmMeans
        f = ArmMeans(dd.outcomes, dd.treatments)
        return f, f

    with pytest.warns(DegenerateMSEWarning):
        rep = run_evaluation(same, d, NcvConfig(K=3, R=2, alpha_levels=(0.05, 0.5)))
    res = rep.ncv
    assert res.e_ncv == 0.0 and res.raw_mse <= 0.0 and res.mse == res.mse_floor
    assert rep.h_two_sided == 1.0 and rep.h_one_sided == 0.5
    for lo, hi in rep.intervals.values():
        assert lo <= 0 <= hi and hi - lo < 1e-5


def test_constant_family_coincides():
    d = make_dataset(n=30, seed=3)
    with pytest.warns(DegenerateMSEWarning):
        res = run_ncv("constant", d, NcvConfig(K=3, R=1))
    assert abs(res.e_ncv) < 1e-12 and res.raw_mse <= res.mse_floor
    assert res.mse == res.mse_floor


def test_equal_fold_sizes_grand_mean():
    d = make_dataset(n=60, seed=4)
    res = run_ncv("ols", d, NcvConfig(K=5, R=2), keep_losses=True)
    inner = [row[5] for row in res.loss_table if row[3] == "inner"]
    assert np.all(res.inner_fold_sizes == 12)
    assert res.e_ncv == pytest.approx(np.mean(inner), abs=1e-12)
    triple = sum(res.inner_fold_means.ravel()) / (5 * 4 * 2)
    assert res.e_ncv == pytest.approx(triple, abs=1e-10)


def test_modified_from_outcome_constant_learner_scalar_pass():
    d = make_dataset(n=40, seed=5)
    cfg = NcvConfig(K=4, R=1, mode="modified_from_outcome", seed=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateMSEWarning)
        res = run_ncv("constant", d, cfg, keep_losses=True)
    # theta-hat and tau are both the arm-mean gap of the training rows
    from hteval import split_folds
    from hteval._rng import child_seed
    y, a = d.outcomes, d.treatments
    w = np.where(a == 1, 2 * y, -2 * y)
    fold_of = split_folds(d, 4, child_seed(1, 0)).fold_of
    means = []
    for k in range(4):
        for j in range(4):
            if j == k:
                continue
            tr = ~np.isin(fold_of, [k, j])
            gap = y[tr & (a == 1)].mean() - y[tr & (a == 0)].mean()
            te = fold_of == j
            means.append(np.mean((w[te] - gap) ** 2 - (w[te] - gap) ** 2))
    assert res.e_ncv == pytest.approx(np.mean(means), abs=1e-12)


def test_modified_mode_runs_and_uses_propensity():
    d = make_dataset(n=60, seed=6)
    cfg = NcvConfig(K=3, R=1, mode="modified")
    a = run_ncv("ols", d, cfg)
    b = run_ncv("ols", d, cfg, propensity=0.5)
    c = run_ncv("ols", d, cfg, propensity=np.full(60, 0.4))
    assert a.e_ncv == b.e_ncv and a.e_ncv != c.e_ncv


def test_determinism_across_workers():
    d = make_dataset(n=40, seed=7)
    cfg = NcvConfig(K=3, R=2, seed=11)
    one = run_evaluation("ols", d, cfg, n_jobs=1).to_json()
    two = run_evaluation("ols", d, cfg, n_jobs=2).to_json()
    assert one == two


def test_report_round_trip():
    d = make_dataset(n=40, seed=8)
    rep = run_evaluation("ols", d, NcvConfig(K=3, R=2, alpha_levels=(0.05, 0.2)))
    again = EvaluationReport.from_json(rep.to_json())
    assert again.to_json() == rep.to_json()
    obj = json.loads(rep.to_json())
    assert obj["schema_version"] == 1 and list(obj) == sorted(obj)
    assert set(obj["intervals"]) == {"0.05", "0.2"}
    assert "wall_time" not in obj and "wall_time" in json.loads(rep.to_json(include_timing=True))
    np.testing.assert_array_equal(again.ncv.inner_fold_means, rep.ncv.inner_fold_means)


def test_loss_table_export(tmp_path):
    d = make_dataset(n=30, seed=9)
    res = run_ncv("ols", d, NcvConfig(K=3, R=1), keep_losses=True)
    path = tmp_path / "losses.csv"
    write_loss_table(res, path)
    rows = list(csv.DictReader(open(path)))
    assert len(rows) == 30 + 2 * 30
    for row in rows[:10]:
        f, g, t = float(row["f_pred"]), float(row["g_pred"]), float(row["target"])
        assert float(row["loss"]) == pytest.approx((t - f) ** 2 - (t - g) ** 2, abs=1e-12)
    with pytest.raises(ValidationError):
        write_loss_table(run_ncv("ols", d, NcvConfig(K=3, R=1)), path)


def test_errors():
    d = make_dataset(n=10, seed=10)
    with pytest.raises(ValidationError):
        run_ncv("ols", d, NcvConfig(K=5, R=1))
    a = np.r_[np.ones(4), np.zeros(26)]
    lopsided = Dataset(np.random.default_rng(0).normal(size=30), a, np.zeros((30, 1)) + np.arange(30)[:, None])
    with pytest.raises((FoldArmMissing, ValidationError)):
        run_ncv("ols", lopsided, NcvConfig(K=5, R=1))

    def broken(dd, m, mode):
        raise FitError("boom")

    with pytest.raises(FitError, match=r"r=0, k=0"):
        run_ncv(broken, make_dataset(n=30), NcvConfig(K=3, R=1))


def test_lasso_modified_degenerate():
    d = make_dataset(n=60, seed=12)
    spec = LearnerSpec("lasso", {"penalty": 1e6})
    with pytest.warns(DegenerateMSEWarning):
        rep = run_evaluation(spec, d, NcvConfig(K=5, R=2, mode="modified"))
    assert rep.ncv.raw_mse <= rep.ncv.mse_floor and rep.ncv.mse == rep.ncv.mse_floor
    assert rep.h_two_sided == 1.0 and np.isfinite(rep.h_one_sided)
