import json
import os

import pandas as pd
import pytest
from click.testing import CliRunner

from dyadnews.cli import cli, load_config

RUNNER = CliRunner()


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    outdir = tmp_path_factory.mktemp("cli_world")
    result = RUNNER.invoke(cli, ["simulate", "--preset", "demo", "--out", str(outdir)])
    assert result.exit_code == 0, result.output
    return outdir


@pytest.fixture(scope="module")
def estimated(world, tmp_path_factory):
    outdir = tmp_path_factory.mktemp("cli_est")
    result = RUNNER.invoke(cli, [
        "estimate",
        "--counts", str(world / "counts.csv"),
        "--registry", str(world / "registry.csv"),
        "--events", str(world / "events.csv"),
        "--out", str(outdir),
    ])
    assert result.exit_code == 0, result.output
    return outdir


def test_simulate_outputs_and_manifest(world):
    for name in ("counts.csv", "registry.csv", "events.csv", "features.csv",
                 "truth.csv", "manifest.json"):
        assert (world / name).exists()
    manifest = json.loads((world / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert manifest["params"] == {"preset": "demo", "seed": 7}
    assert set(manifest["outputs"]) == {"counts", "registry", "events", "features", "truth"}


def test_simulate_manifest_reproducible(world, tmp_path):
    result = RUNNER.invoke(cli, ["simulate", "--preset", "demo", "--out", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "manifest.json").read_bytes() == (world / "manifest.json").read_bytes()


def test_ingest_roundtrip(world, tmp_path):
    result = RUNNER.invoke(cli, [
        "ingest", "--counts", str(world / "counts.csv"),
        "--registry", str(world / "registry.csv"), "--out", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "store.csv").exists()
    assert "ingested" in result.output


def test_ingest_rejects_bad_counts(world, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("day,source_id,source_country,dest_country,count_total,count_disaster\n"
                   "2020-01-01,ghost,DEU,BGD,1,0\n")
    result = RUNNER.invoke(cli, [
        "ingest", "--counts", str(bad),
        "--registry", str(world / "registry.csv"), "--out", str(tmp_path),
    ])
    assert result.exit_code == 1
    assert "error:" in result.output


def test_missing_input_is_usage_error(tmp_path):
    result = RUNNER.invoke(cli, [
        "ingest", "--counts", str(tmp_path / "nope.csv"),
        "--registry", str(tmp_path / "nope2.csv"),
    ])
    assert result.exit_code == 2


def test_estimate_outputs(estimated):
    est = pd.read_csv(estimated / "estimates.csv")
    assert list(est.columns) == ["event_id", "report_country", "beta", "se", "tstat",
                                 "beta_shrunk", "n_obs", "flags"]
    assert len(est) == 40 * 24  # demo: 40 events x 24 foreign reporting countries
    assert (estimated / "type_means.csv").exists()
    manifest = json.loads((estimated / "manifest.json").read_text())
    assert manifest["params"]["pad"] == 7 and manifest["params"]["tau"] == 3


def test_config_file_defaults_and_flag_precedence(world, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("# estimation settings\npad = 5\ntransform = level\n")
    values = load_config(config)
    assert values == {"pad": "5", "transform": "level"}
    out = tmp_path / "out"
    result = RUNNER.invoke(cli, [
        "estimate", "--counts", str(world / "counts.csv"),
        "--registry", str(world / "registry.csv"),
        "--events", str(world / "events.csv"),
        "--config", str(config), "--pad", "6", "--out", str(out),
    ])
    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["params"]["pad"] == 6          # explicit flag wins
    assert manifest["params"]["transform"] == "level"  # config supplies default


def test_bad_config_line_is_usage_error(world, tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("pad 5\n")
    result = RUNNER.invoke(cli, [
        "estimate", "--counts", str(world / "counts.csv"),
        "--registry", str(world / "registry.csv"),
        "--events", str(world / "events.csv"),
        "--config", str(config),
    ])
    assert result.exit_code == 2
    assert "bad config line" in result.output


def test_outdir_env_fallback(world, tmp_path, monkeypatch):
    target = tmp_path / "env_out"
    monkeypatch.setenv("DYADNEWS_OUT", str(target))
    result = RUNNER.invoke(cli, [
        "ingest", "--counts", str(world / "counts.csv"),
        "--registry", str(world / "registry.csv"),
    ])
    assert result.exit_code == 0, result.output
    assert (target / "store.csv").exists()


def test_gradient_command(world, estimated, tmp_path):
    result = RUNNER.invoke(cli, [
        "gradient", "--estimates", str(estimated / "estimates.csv"),
        "--events", str(world / "events.csv"),
        "--bins", "8", "--out", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    bins = pd.read_csv(tmp_path / "death_bins.csv")
    assert len(bins) == 8
    grads = pd.read_csv(tmp_path / "death_gradients.csv")
    assert {"report_country", "xi", "nu", "ratio"} <= set(grads.columns)


def test_interact_command(world, estimated, tmp_path):
    result = RUNNER.invoke(cli, [
        "interact", "--estimates", str(estimated / "estimates.csv"),
        "--events", str(world / "events.csv"),
        "--features", str(world / "features.csv"),
        "--mode", "univariate", "--out", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    ladder = pd.read_csv(tmp_path / "connectedness.csv")
    assert set(ladder["spec_id"]) == {1, 2, 3, 4, 5, 6}
    assert "social_share" in set(ladder["feature"])


@pytest.fixture(scope="module")
def forest_out(world, estimated, tmp_path_factory):
    outdir = tmp_path_factory.mktemp("cli_forest")
    result = RUNNER.invoke(cli, [
        "forest", "--estimates", str(estimated / "estimates.csv"),
        "--events", str(world / "events.csv"),
        "--features", str(world / "features.csv"),
        "--trees", "30", "--importance-repeats", "2", "--out", str(outdir),
    ])
    assert result.exit_code == 0, result.output
    return outdir


def test_forest_command(forest_out):
    assert (forest_out / "model.joblib").exists()
    report = pd.read_csv(forest_out / "forest_report.csv")
    metrics = dict(zip(report["metric"], report["value"]))
    assert "r2_oob" in metrics and metrics["n_train"] > 0


def test_bootstrap_command(world, estimated, tmp_path):
    result = RUNNER.invoke(cli, [
        "bootstrap", "--estimates", str(estimated / "estimates.csv"),
        "--events", str(world / "events.csv"),
        "--scheme", "event_half", "--draws", "20", "--seed", "4",
        "--out", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    summary = pd.read_csv(tmp_path / "bootstrap_summary.csv")
    assert (summary["ci_lo"] <= summary["ci_hi"]).all()
    draws = pd.read_csv(tmp_path / "bootstrap_draws.csv")
    assert draws["draw_id"].max() == 19


def test_counterfactual_command(world, forest_out, tmp_path):
    result = RUNNER.invoke(cli, [
        "counterfactual", "--model", str(forest_out / "model.joblib"),
        "--features", str(world / "features.csv"),
        "--reporting", "DEU", "--affected", "BGD", "--dtype", "earthquake",
        "--deaths", "100", "--out", str(tmp_path),
    ])
    assert result.exit_code == 0, result.output
    grid = pd.read_csv(tmp_path / "counterfactual_grid.csv")
    assert set(grid["report_country"]) == {"DEU"}
    eqs = pd.read_csv(tmp_path / "equivalents.csv")
    assert (eqs["deaths_ref"] == 100).all()
    assert "BGD" not in set(eqs["query_country"])


def test_counterfactual_unknown_pair_exit_1(world, forest_out, tmp_path):
    result = RUNNER.invoke(cli, [
        "counterfactual", "--model", str(forest_out / "model.joblib"),
        "--features", str(world / "features.csv"),
        "--reporting", "DEU", "--affected", "XXX", "--dtype", "earthquake",
        "--out", str(tmp_path),
    ])
    assert result.exit_code == 1
    assert "no dyadic features" in result.output
