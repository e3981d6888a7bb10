import numpy as np
import pandas as pd
import pytest

from dyadnews.counterfactual import (
    DEFAULT_DEATHS_GRID,
    CounterfactualError,
    ScenarioGrid,
    equivalent_deaths,
    grids_to_frame,
    normalize_view,
    simulate_grid,
)
from dyadnews.forest import ForestConfig, train_forest
from tests.test_forest import synthetic_rows


def grid(beta, deaths=None, report="DEU", affected="BGD", dtype="earthquake"):
    beta = np.asarray(beta, dtype=float)
    if deaths is None:
        deaths = np.arange(10.0, 10.0 + 10 * len(beta), 10.0)
    return ScenarioGrid(report, affected, dtype, np.asarray(deaths, dtype=float), beta)


def test_grid_validation():
    with pytest.raises(CounterfactualError, match="ascending"):
        grid([1.0, 2.0], deaths=[10.0, 10.0])
    with pytest.raises(CounterfactualError, match="finite"):
        grid([1.0, np.nan])


def test_isotonic_smooths_local_inversions():
    g = grid([0.1, 0.3, 0.2, 0.4])
    iso = g.isotonic()
    assert np.all(np.diff(iso) >= 0)
    # PAVA pools the violating pair to its mean and leaves the ends alone
    assert iso[0] == 0.1 and iso[3] == 0.4
    assert iso[1] == iso[2] == pytest.approx(0.25)


def test_equivalent_linear_round_trip():
    # query rises at half the rate of the target: matching the target's value
    # at d needs 2d fatalities... here target(d) = query(2d), so 100 -> 50
    deaths = np.arange(10.0, 210.0, 10.0)
    target = grid(0.002 * deaths, deaths=deaths)
    query = grid(0.004 * deaths, deaths=deaths)
    eq = equivalent_deaths(target, query, deaths_ref=100.0)
    assert not eq.out_of_range
    assert eq.deaths_star == pytest.approx(50.0)
    # symmetric query: A -> B -> A returns the start within one grid step
    back = equivalent_deaths(query, target, deaths_ref=eq.deaths_star)
    assert back.deaths_star == pytest.approx(100.0, abs=10.0)


def test_equivalent_plateau_takes_smallest_crossing():
    deaths = np.arange(10.0, 80.0, 10.0)
    target = grid([0.5] * 7, deaths=deaths)
    query = grid([0.1, 0.5, 0.5, 0.5, 0.7, 0.8, 0.9], deaths=deaths)
    eq = equivalent_deaths(target, query, deaths_ref=40.0)
    assert eq.deaths_star == 20.0  # left edge of the plateau at 0.5


def test_equivalent_out_of_range_markers():
    deaths = np.arange(10.0, 60.0, 10.0)
    low = grid([0.0, 0.1, 0.2, 0.3, 0.4], deaths=deaths)
    high = grid([1.0, 1.1, 1.2, 1.3, 1.4], deaths=deaths)
    eq = equivalent_deaths(high, low, deaths_ref=30.0)
    assert eq.out_of_range and eq.deaths_star is None
    assert eq.nearest_endpoint == 50.0
    eq2 = equivalent_deaths(low, high, deaths_ref=30.0)
    assert eq2.out_of_range and eq2.nearest_endpoint == 10.0
    # flat query curve is always out of range
    flat = grid([0.2] * 5, deaths=deaths)
    assert equivalent_deaths(low, flat, deaths_ref=50.0).out_of_range


def test_equivalent_requires_shared_axis_and_in_grid_ref():
    a = grid([0.1, 0.2, 0.3])
    b = grid([0.1, 0.2, 0.3], deaths=[5.0, 15.0, 25.0])
    with pytest.raises(CounterfactualError, match="share the death axis"):
        equivalent_deaths(a, b, deaths_ref=10.0)
    with pytest.raises(CounterfactualError, match="outside the grid"):
        equivalent_deaths(a, a, deaths_ref=1000.0)


def test_simulate_grid_uses_forest(demo_features):
    model = train_forest(synthetic_rows(), ForestConfig(n_trees=50, seed=3))
    scenarios = [("DEU", "BGD", "earthquake"), ("DEU", "XXX", "flood")]
    grids, skipped = simulate_grid(model, scenarios, demo_features)
    assert len(grids) == 1 and skipped == [("DEU", "XXX", "flood")]
    g = grids[0]
    assert np.array_equal(g.deaths, np.asarray(sorted(DEFAULT_DEATHS_GRID), dtype=float))
    # training signal is increasing in log_deaths, so the raw curve trends up
    assert g.beta_hat[-1] > g.beta_hat[0]
    frame = grids_to_frame(grids)
    assert list(frame.columns) == ["report_country", "affected_country", "dtype",
                                   "deaths", "beta_hat"]
    assert len(frame) == len(g.deaths)


def beta_table(n_units=3, n_values=30, unit_col="affected_country", seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for u in range(n_units):
        for v in range(n_values):
            rec = {"report_country": f"R{v}", "affected_country": f"A{v}",
                   "dtype": "flood", "deaths": 100,
                   "beta_hat": rng.normal(0.2, 0.1)}
            rec[unit_col] = f"U{u}"
            rows.append(rec)
    return pd.DataFrame(rows)


def test_normalize_view_maps_p5_p95_to_unit_interval():
    table = beta_table()
    view = normalize_view(table, "country_of_disaster")
    assert set(view.anchors) == {"U0", "U1", "U2"}
    assert view.values["norm_value"].between(-1.0, 1.0).all()
    for unit, (p5, p95) in view.anchors.items():
        sub = view.values[view.values["affected_country"] == unit]
        vals = sub["beta_hat"].to_numpy()
        assert (p5, p95) == pytest.approx(tuple(np.percentile(vals, [5, 95])))
        # exact linear map inside the anchors
        inside = (vals >= p5) & (vals <= p95)
        expect = 2.0 * (vals[inside] - p5) / (p95 - p5) - 1.0
        assert np.allclose(sub["norm_value"].to_numpy()[inside], expect)


def test_normalize_view_skips_small_units_and_flags_degenerate():
    table = beta_table(n_values=30)
    small = beta_table(n_units=1, n_values=5, seed=1)
    small["affected_country"] = "TINY"
    flat = beta_table(n_units=1, n_values=25, seed=2)
    flat["affected_country"] = "FLAT"
    flat["beta_hat"] = 0.5
    view = normalize_view(pd.concat([table, small, flat], ignore_index=True),
                          "country_of_disaster")
    assert view.skipped_units == ("TINY",)
    assert view.undefined_units == ("FLAT",)
    assert not view.values["affected_country"].isin(["TINY", "FLAT"]).any()


def test_normalize_view_reporting_axis_and_errors():
    table = beta_table(unit_col="report_country")
    view = normalize_view(table, "country_of_reporting")
    assert set(view.anchors) == {"U0", "U1", "U2"}
    with pytest.raises(CounterfactualError, match="unknown view"):
        normalize_view(table, "country_of_weather")
    with pytest.raises(CounterfactualError, match="columns"):
        normalize_view(table.drop(columns=["beta_hat"]), "country_of_disaster")
