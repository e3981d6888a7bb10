import numpy as np
import pandas as pd
import pytest

from dyadnews.features import FeatureMatrix
from dyadnews.heterogeneity import (
    SPEC_CONTROLS,
    HeterogeneityError,
    binned_death_curve,
    connectedness_ladder,
    connectedness_regression,
    death_gradient_by_country,
    robust_features,
)
from dyadnews.synthetic import PRESETS


def test_spec_ladder_structure():
    assert sorted(SPEC_CONTROLS) == [1, 2, 3, 4, 5, 6]
    assert SPEC_CONTROLS[1] == ()
    assert SPEC_CONTROLS[6] == ("event_country", "report_country", "event_id")


def test_binned_curve_rises_with_deaths(demo_estimates, demo_catalog):
    curve = binned_death_curve(demo_estimates, demo_catalog, n_bins=8)
    assert list(curve.columns) == ["bin", "mean_beta", "mean_deaths",
                                   "mean_log_deaths", "n_estimates"]
    assert len(curve) == 8
    assert curve["mean_log_deaths"].is_monotonic_increasing
    # demo world plants a positive death gradient: top bins above bottom bins
    top = curve["mean_beta"].iloc[-3:].mean()
    bottom = curve["mean_beta"].iloc[:3].mean()
    assert top > bottom


def test_binned_curve_residualize_keeps_grand_mean(demo_estimates, demo_catalog):
    raw = binned_death_curve(demo_estimates, demo_catalog, n_bins=5)
    res = binned_death_curve(demo_estimates, demo_catalog, n_bins=5,
                             residualize_dtype=True)
    w_raw = (raw["mean_beta"] * raw["n_estimates"]).sum() / raw["n_estimates"].sum()
    w_res = (res["mean_beta"] * res["n_estimates"]).sum() / res["n_estimates"].sum()
    assert w_res == pytest.approx(w_raw, abs=1e-10)


def test_binned_curve_reduces_bins_with_warning(demo_estimates, demo_catalog):
    with pytest.warns(UserWarning, match="reducing bins"):
        curve = binned_death_curve(demo_estimates, demo_catalog, n_bins=1000)
    assert len(curve) == demo_catalog.to_frame()["event_id"].nunique()


def test_death_gradient_recovers_planted_slope(demo_estimates, demo_catalog,
                                               demo_truth):
    results = death_gradient_by_country(demo_estimates, demo_catalog, min_events=10)
    assert len(results) >= 20
    # oracle: the same per-country regression run on the planted truth values
    # (the planted interaction term shifts the slope away from the bare
    # death-gradient parameter, so the truth-implied slope is the target)
    cat = demo_catalog.to_frame()[["event_id", "deaths"]]
    truth = demo_truth.merge(cat, on="event_id")
    truth["log_deaths"] = np.log1p(truth["deaths"].astype(float))
    want = {}
    for country, sub in truth.groupby("report_country"):
        X = np.column_stack([np.ones(len(sub)), sub["log_deaths"]])
        want[country] = np.linalg.lstsq(X, sub["beta_true"].to_numpy(), rcond=None)[0][1]
    errs = [r.nu - want[r.report_country] for r in results if r.flags == ""]
    assert np.max(np.abs(errs)) < 0.05
    assert abs(np.median(errs)) < 0.01
    assert np.median([want[r.report_country] for r in results]) > PRESETS["demo"].death_gradient / 2
    # ratio is nu / xi wherever defined
    for r in results:
        if r.flags == "" and r.xi != 0:
            assert r.ratio == pytest.approx(r.nu / r.xi)


def test_death_gradient_min_events_floor(demo_estimates, demo_catalog):
    none = death_gradient_by_country(demo_estimates, demo_catalog, min_events=10_000)
    assert none == []


def test_interaction_sign_recovery(demo_estimates, demo_features, demo_catalog):
    ladder = connectedness_ladder(demo_estimates, demo_features, demo_catalog,
                                  mode="interaction", feature_names=["social_share"])
    assert len(ladder) == 6
    assert (ladder["flags"] == "").all()
    # the demo world plants a positive social_share x log-deaths interaction
    assert (ladder["coef"] > 0).all()


def test_univariate_ladder_and_robustness(demo_estimates, demo_features, demo_catalog):
    ladder = connectedness_ladder(demo_estimates, demo_features, demo_catalog,
                                  mode="univariate",
                                  feature_names=["social_share", "distance_km"])
    assert len(ladder) == 12
    robust = robust_features(ladder)
    assert set(robust) == {"social_share", "distance_km"}
    # distance is pure noise in the generating process: not robustly signed
    # at every rung of the control ladder in general; the call just must
    # return a bool per feature
    assert all(isinstance(v, bool) for v in robust.values())


def test_precision_weighting_runs(demo_estimates, demo_features, demo_catalog):
    out = connectedness_regression(demo_estimates, demo_features, demo_catalog,
                                   mode="univariate", spec_id=4,
                                   feature="social_share", precision_weighted=True)
    assert out["flags"] == ""
    assert np.isfinite(out["coef"]) and np.isfinite(out["se"])


def test_mode_and_spec_validation(demo_estimates, demo_features, demo_catalog):
    with pytest.raises(HeterogeneityError, match="mode"):
        connectedness_regression(demo_estimates, demo_features, demo_catalog,
                                 mode="quadratic", spec_id=1, feature="social_share")
    with pytest.raises(HeterogeneityError, match="spec_id"):
        connectedness_regression(demo_estimates, demo_features, demo_catalog,
                                 mode="univariate", spec_id=7, feature="social_share")
    with pytest.raises(HeterogeneityError, match="not in feature table"):
        connectedness_regression(demo_estimates, demo_features, demo_catalog,
                                 mode="univariate", spec_id=1, feature="ghost")


def test_mostly_missing_feature_skipped(demo_estimates, demo_features, demo_catalog):
    table = demo_features.table.copy()
    sparse = table[["social_share"]].copy()
    sparse.iloc[3:, 0] = np.nan
    sparse = sparse.rename(columns={"social_share": "sparse"})
    matrix = FeatureMatrix(table=pd.concat([table, sparse], axis=1))
    with pytest.warns(UserWarning, match="missing for more than 90%"):
        out = connectedness_regression(demo_estimates, matrix, demo_catalog,
                                       mode="univariate", spec_id=1, feature="sparse")
    assert out["flags"] == "skipped_missing"
    assert np.isnan(out["coef"])
