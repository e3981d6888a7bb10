import numpy as np
import pandas as pd
import pytest

from dyadnews.bootstrap import (
    BootstrapError,
    BootstrapPlan,
    bootstrap_country_blocks,
    bootstrap_events,
    export_draws,
    summarize_bootstrap,
)
from dyadnews.catalog import load_events


def make_estimates(n_events=20, n_reports=5, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for e in range(n_events):
        for r in range(n_reports):
            rows.append((f"ev{e:04d}", f"R{r}", rng.normal(0.1, 0.05)))
    return pd.DataFrame(rows, columns=["event_id", "report_country", "beta"])


def make_catalog(tmp_path, n_events=20, n_countries=8):
    lines = ["event_id,country,dtype,start_day,end_day,deaths"]
    for e in range(n_events):
        c = f"C{e % n_countries}"
        day = f"2020-01-{(e % 27) + 1:02d}"
        lines.append(f"ev{e:04d},{c},flood,{day},{day},{e}")
    path = tmp_path / "events.csv"
    path.write_text("\n".join(lines) + "\n")
    return load_events(path)


def mean_beta(sub):
    return float(sub["beta"].mean())


def test_plan_validation():
    with pytest.raises(BootstrapError, match="scheme"):
        BootstrapPlan(scheme="jackknife").validate()
    with pytest.raises(BootstrapError, match="at least 2"):
        BootstrapPlan(n_draws=1).validate()


def test_event_half_deterministic_and_halves():
    est = make_estimates()
    plan = BootstrapPlan(scheme="event_half", n_draws=50, seed=5)
    sizes = []

    def stat(sub):
        sizes.append(sub["event_id"].nunique())
        return mean_beta(sub)

    a = bootstrap_events(est, stat, plan)
    b = bootstrap_events(est, mean_beta, plan)
    assert a.values().tolist() == b.values().tolist()
    assert a.n_missing == 0
    assert set(sizes) == {10}  # exactly half of the 20 events per draw
    # different seed gives a different distribution
    c = bootstrap_events(est, mean_beta, BootstrapPlan(scheme="event_half", n_draws=50, seed=6))
    assert a.values().tolist() != c.values().tolist()


def test_event_half_needs_four_events():
    est = make_estimates(n_events=3)
    with pytest.raises(BootstrapError, match="at least 4"):
        bootstrap_events(est, mean_beta, BootstrapPlan(scheme="event_half"))


def test_scheme_mismatch_rejected(tmp_path):
    est = make_estimates()
    with pytest.raises(BootstrapError, match="event_half"):
        bootstrap_events(est, mean_beta, BootstrapPlan(scheme="disaster_country_drop"))
    with pytest.raises(BootstrapError, match="scheme"):
        bootstrap_country_blocks(est, make_catalog(tmp_path), mean_beta,
                                 BootstrapPlan(scheme="event_half"))


def test_disaster_country_drop(tmp_path):
    est = make_estimates()
    catalog = make_catalog(tmp_path)
    plan = BootstrapPlan(scheme="disaster_country_drop", n_draws=30, drop_count=3, seed=1)
    dropped_events = []

    def stat(sub):
        dropped_events.append(20 - sub["event_id"].nunique())
        return mean_beta(sub)

    res = bootstrap_country_blocks(est, catalog, stat, plan)
    assert res.n_missing == 0
    # 8 affected countries hold 20 events; dropping 3 removes whole blocks
    assert all(d >= 3 for d in dropped_events)


def test_reporting_country_drop(tmp_path):
    est = make_estimates()
    plan = BootstrapPlan(scheme="reporting_country_drop", n_draws=20, drop_count=2, seed=1)

    def stat(sub):
        assert sub["report_country"].nunique() == 3
        return mean_beta(sub)

    res = bootstrap_country_blocks(est, make_catalog(tmp_path), stat, plan)
    assert len(res.draws) == 20


def test_drop_count_must_leave_population(tmp_path):
    est = make_estimates()
    plan = BootstrapPlan(scheme="disaster_country_drop", drop_count=8)
    with pytest.raises(BootstrapError, match="drop_count"):
        bootstrap_country_blocks(est, make_catalog(tmp_path), mean_beta, plan)


def test_missing_budget_enforced():
    est = make_estimates()
    calls = iter(range(1000))

    def flaky(sub):
        return None if next(calls) % 3 == 0 else mean_beta(sub)

    plan = BootstrapPlan(scheme="event_half", n_draws=30, seed=2)
    with pytest.raises(BootstrapError, match="budget"):
        bootstrap_events(est, flaky, plan)

    def rarely_missing(sub):
        return None if next(calls) % 10 == 0 else mean_beta(sub)

    res = bootstrap_events(est, rarely_missing, plan)
    assert 0 < res.n_missing <= 6


def test_summarize_percentiles_and_p_floor():
    values = np.linspace(1.0, 2.0, 100)  # all positive: p floored at 1/n
    s = summarize_bootstrap(values, point=1.5)
    assert s["p_value"] == pytest.approx(0.01)
    assert s["ci_lo"] == pytest.approx(np.percentile(values, 2.5))
    assert s["ci_hi"] == pytest.approx(np.percentile(values, 97.5))
    assert s["n_draws"] == 100
    # balanced signs: p capped at 1
    mixed = np.concatenate([np.full(50, -1.0), np.full(50, 1.0)])
    assert summarize_bootstrap(mixed, point=0.0)["p_value"] == 1.0
    with pytest.raises(BootstrapError, match="at least 2"):
        summarize_bootstrap([1.0, np.nan], point=1.0)


def test_export_draws_expands_dicts(tmp_path):
    est = make_estimates()
    plan = BootstrapPlan(scheme="event_half", n_draws=5, seed=3)

    def stat(sub):
        return {"mean": mean_beta(sub), "n": float(len(sub))}

    res = bootstrap_events(est, stat, plan)
    path = tmp_path / "draws.csv"
    export_draws(res, "pooled", path)
    out = pd.read_csv(path)
    assert list(out.columns) == ["scheme", "statistic", "draw_id", "value"]
    assert len(out) == 10
    assert set(out["statistic"]) == {"pooled:mean", "pooled:n"}
