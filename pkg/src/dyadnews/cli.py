"""Command-line orchestration.

Every subcommand reads its inputs, writes deterministic artifacts into an
output directory, and records a manifest with content hashes of inputs and
outputs plus the run parameters.  A key=value config file can supply defaults
for any flag; explicit flags win.  Exit codes: 0 ok, 1 input error, 2 usage.
The output directory can also be set via the ``DYADNEWS_OUT`` environment
variable.
"""

from __future__ import annotations

import functools
import os
import sys

import click
import numpy as np
import pandas as pd

from dyadnews import __version__
from dyadnews.bootstrap import BootstrapPlan, bootstrap_country_blocks, bootstrap_events, export_draws, summarize_bootstrap
from dyadnews.catalog import load_events
from dyadnews.counterfactual import grids_to_frame, simulate_grid, equivalent_deaths
from dyadnews.estimator import export_estimates, pool_by_type, run_estimation
from dyadnews.features import load_features
from dyadnews.forest import (
    ForestConfig,
    best_subset_path,
    build_training_frame,
    load_model,
    permutation_importance,
    save_model,
    train_forest,
)
from dyadnews.heterogeneity import binned_death_curve, connectedness_ladder, death_gradient_by_country
from dyadnews.manifest import write_manifest
from dyadnews.panel import ingest_counts
from dyadnews.synthetic import PRESETS, generate_world, write_world


def _outdir(out: str | None) -> str:
    path = out or os.environ.get("DYADNEWS_OUT") or "."
    os.makedirs(path, exist_ok=True)
    return path


def load_config(path: str | None) -> dict[str, str]:
    """Parse a key=value config file; blank lines and '#' comments ignored."""
    if not path:
        return {}
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise click.UsageError(f"bad config line: {line!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
    return values


def _resolve(flag_value, config: dict, key: str, default, cast):
    if flag_value is not None:
        return flag_value
    if key in config:
        raw = config[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes")
        return cast(raw)
    return default


def guarded(func):
    """Map input/data errors to exit code 1 (usage errors stay exit code 2)."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except click.UsageError:
            raise
        except (ValueError, OSError, KeyError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.version_option(version=__version__)
def cli():
    """Dyadic event-study engine for cross-border disaster media attention."""


@cli.command()
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default="demo", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the preset seed.")
@click.option("--out", type=click.Path(), default=None)
@guarded
def simulate(preset, seed, out):
    """Generate a synthetic world with planted ground truth."""
    from dataclasses import replace

    outdir = _outdir(out)
    config = PRESETS[preset]
    if seed is not None:
        config = replace(config, seed=seed)
    world = generate_world(config)
    paths = write_world(world, outdir)
    write_manifest(outdir, "simulate", {"preset": preset, "seed": config.seed},
                   inputs={}, outputs=paths)
    click.echo(f"wrote world preset={preset} seed={config.seed} to {outdir}")


@cli.command()
@click.option("--counts", required=True, type=click.Path(exists=True))
@click.option("--registry", required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@guarded
def ingest(counts, registry, out):
    """Validate and canonicalize a counts panel."""
    outdir = _outdir(out)
    store = ingest_counts(counts, registry)
    path = os.path.join(outdir, "store.csv")
    store.save(path)
    write_manifest(outdir, "ingest", {},
                   inputs={"counts": counts, "registry": registry},
                   outputs={"store": path})
    click.echo(f"ingested {len(store)} cells "
               f"({store.span.n_sources if store.span else 0} sources)")


@cli.command()
@click.option("--counts", required=True, type=click.Path(exists=True))
@click.option("--registry", required=True, type=click.Path(exists=True))
@click.option("--events", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--pad", type=int, default=None, help="Window padding in days [default: 7].")
@click.option("--tau", type=int, default=None, help="Treatment window length in days [default: 3].")
@click.option("--transform", type=click.Choice(["level", "log1p", "ihs"]), default=None)
@click.option("--channel", type=click.Choice(["total", "disaster"]), default=None)
@click.option("--shrink-t", type=float, default=None, help="Shrinkage t threshold [default: 1.65].")
@click.option("--two-sided", is_flag=True, default=False, help="Shrink on |t| instead of t.")
@click.option("--pooled", is_flag=True, default=False, help="Pool across reporting countries.")
@click.option("--out", type=click.Path(), default=None)
@guarded
def estimate(counts, registry, events, config_path, pad, tau, transform, channel,
             shrink_t, two_sided, pooled, out):
    """Estimate per-event attention increases with two-way clustered SEs."""
    cfg = load_config(config_path)
    pad = _resolve(pad, cfg, "pad", 7, int)
    tau = _resolve(tau, cfg, "tau", 3, int)
    transform = _resolve(transform, cfg, "transform", "log1p", str)
    channel = _resolve(channel, cfg, "channel", "total", str)
    shrink_t = _resolve(shrink_t, cfg, "shrink_t", 1.65, float)

    outdir = _outdir(out)
    store = ingest_counts(counts, registry)
    catalog = load_events(events)
    estimates = run_estimation(store, catalog, pad=pad, tau=tau, transform_mode=transform,
                               outcome_channel=channel, by_report_country=not pooled,
                               shrink_threshold=shrink_t, two_sided=two_sided)
    path = os.path.join(outdir, "estimates.csv")
    export_estimates(estimates, path)

    pools = pool_by_type(estimates, catalog)
    pools_path = os.path.join(outdir, "type_means.csv")
    pools.overall.to_csv(pools_path, index=False, lineterminator="\n", float_format="%.12g")

    write_manifest(outdir, "estimate",
                   {"pad": pad, "tau": tau, "transform": transform, "channel": channel,
                    "shrink_t": shrink_t, "two_sided": two_sided, "pooled": pooled},
                   inputs={"counts": counts, "registry": registry, "events": events},
                   outputs={"estimates": path, "type_means": pools_path})
    click.echo(f"estimated {estimates['event_id'].nunique()} events "
               f"-> {len(estimates)} estimates")


@cli.command()
@click.option("--estimates", "estimates_path", required=True, type=click.Path(exists=True))
@click.option("--events", required=True, type=click.Path(exists=True))
@click.option("--bins", type=int, default=50, show_default=True)
@click.option("--min-events", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@guarded
def gradient(estimates_path, events, bins, min_events, out):
    """Binned death curve and per-country death gradients."""
    outdir = _outdir(out)
    estimates = pd.read_csv(estimates_path, dtype={"event_id": str, "flags": str}).fillna({"flags": ""})
    catalog = load_events(events)

    curve = binned_death_curve(estimates, catalog, n_bins=bins)
    curve_path = os.path.join(outdir, "death_bins.csv")
    curve.to_csv(curve_path, index=False, lineterminator="\n", float_format="%.12g")

    gradients = death_gradient_by_country(estimates, catalog, min_events=min_events)
    grad_frame = pd.DataFrame(
        [(g.report_country, g.xi, g.nu, g.ratio, g.se_xi, g.se_nu, g.n_events, g.flags)
         for g in gradients],
        columns=["report_country", "xi", "nu", "ratio", "se_xi", "se_nu", "n_events", "flags"],
    )
    grad_path = os.path.join(outdir, "death_gradients.csv")
    grad_frame.to_csv(grad_path, index=False, lineterminator="\n", float_format="%.12g")

    write_manifest(outdir, "gradient", {"bins": bins, "min_events": min_events},
                   inputs={"estimates": estimates_path, "events": events},
                   outputs={"death_bins": curve_path, "death_gradients": grad_path})
    click.echo(f"wrote {len(curve)} bins and {len(grad_frame)} country gradients")


@cli.command()
@click.option("--estimates", "estimates_path", required=True, type=click.Path(exists=True))
@click.option("--events", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(["univariate", "interaction"]), default="interaction",
              show_default=True)
@click.option("--weighted", is_flag=True, default=False, help="Precision-weight by 1/se^2.")
@click.option("--out", type=click.Path(), default=None)
@guarded
def interact(estimates_path, events, features_path, mode, weighted, out):
    """Six-specification connectedness regressions for every feature."""
    outdir = _outdir(out)
    estimates = pd.read_csv(estimates_path, dtype={"event_id": str, "flags": str}).fillna({"flags": ""})
    catalog = load_events(events)
    features = load_features(features_path)
    ladder = connectedness_ladder(estimates, features, catalog, mode,
                                  precision_weighted=weighted)
    path = os.path.join(outdir, "connectedness.csv")
    ladder.to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
    write_manifest(outdir, "interact", {"mode": mode, "weighted": weighted},
                   inputs={"estimates": estimates_path, "events": events,
                           "features": features_path},
                   outputs={"connectedness": path})
    click.echo(f"wrote {len(ladder)} (feature, spec) rows")


def _load_forest_inputs(estimates_path, events, features_path):
    estimates = pd.read_csv(estimates_path, dtype={"event_id": str, "flags": str}).fillna({"flags": ""})
    catalog = load_events(events)
    features = load_features(features_path)
    return build_training_frame(estimates, features, catalog), features


@cli.command()
@click.option("--estimates", "estimates_path", required=True, type=click.Path(exists=True))
@click.option("--events", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--set", "feature_set", type=click.Choice(["dyadic_only", "disaster_only", "combined"]),
              default="combined", show_default=True)
@click.option("--trees", type=int, default=1000, show_default=True)
@click.option("--min-node", type=int, default=30, show_default=True)
@click.option("--min-terminal", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--importance-repeats", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@guarded
def forest(estimates_path, events, features_path, feature_set, trees, min_node,
           min_terminal, seed, importance_repeats, out):
    """Train a regression forest and report OOB fit and permutation importance."""
    outdir = _outdir(out)
    frame, _ = _load_forest_inputs(estimates_path, events, features_path)
    config = ForestConfig(n_trees=trees, min_node_size=min_node, min_terminal=min_terminal,
                          seed=seed, feature_set=feature_set)
    model = train_forest(frame, config)
    importance = permutation_importance(model, n_repeats=importance_repeats)

    model_path = os.path.join(outdir, "model.joblib")
    save_model(model, model_path)
    report = pd.DataFrame(
        [("r2_oob", model.r2_oob), ("n_train", model.n_train), ("n_dropped", model.n_dropped)]
        + [(f"importance:{k}", v) for k, v in sorted(importance.items())],
        columns=["metric", "value"],
    )
    report_path = os.path.join(outdir, "forest_report.csv")
    report.to_csv(report_path, index=False, lineterminator="\n", float_format="%.12g")

    write_manifest(outdir, "forest",
                   {"set": feature_set, "trees": trees, "min_node": min_node,
                    "min_terminal": min_terminal, "seed": seed,
                    "importance_repeats": importance_repeats},
                   inputs={"estimates": estimates_path, "events": events,
                           "features": features_path},
                   outputs={"model": model_path, "report": report_path})
    click.echo(f"r2_oob={model.r2_oob:.4f} on {model.n_train} rows")


@cli.command("subset-path")
@click.option("--estimates", "estimates_path", required=True, type=click.Path(exists=True))
@click.option("--events", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--trees", type=int, default=200, show_default=True,
              help="Reduced tree count used along the path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@guarded
def subset_path(estimates_path, events, features_path, trees, seed, out):
    """Best-subset path: 1023 forests over the dyadic feature subsets."""
    outdir = _outdir(out)
    frame, _ = _load_forest_inputs(estimates_path, events, features_path)
    config = ForestConfig(seed=seed)
    path_frame = best_subset_path(frame, config, n_trees_path=trees)
    path = os.path.join(outdir, "subset_path.csv")
    path_frame.to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
    write_manifest(outdir, "subset-path", {"trees": trees, "seed": seed},
                   inputs={"estimates": estimates_path, "events": events,
                           "features": features_path},
                   outputs={"subset_path": path})
    click.echo(f"wrote {len(path_frame)} subset rows")


@cli.command("bootstrap")
@click.option("--estimates", "estimates_path", required=True, type=click.Path(exists=True))
@click.option("--events", required=True, type=click.Path(exists=True))
@click.option("--scheme", type=click.Choice(["event_half", "disaster_country_drop",
                                             "reporting_country_drop"]),
              default="event_half", show_default=True)
@click.option("--draws", type=int, default=100, show_default=True)
@click.option("--drop-count", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@guarded
def bootstrap(estimates_path, events, scheme, draws, drop_count, seed, out):
    """Block bootstrap of the per-type mean attention increases."""
    outdir = _outdir(out)
    estimates = pd.read_csv(estimates_path, dtype={"event_id": str, "flags": str}).fillna({"flags": ""})
    catalog = load_events(events)
    plan = BootstrapPlan(scheme=scheme, n_draws=draws, drop_count=drop_count, seed=seed)

    def type_means(sub):
        pools = pool_by_type(sub, catalog)
        return dict(zip(pools.overall["dtype"], pools.overall["mean_beta"]))

    if scheme == "event_half":
        result = bootstrap_events(estimates, type_means, plan)
    else:
        result = bootstrap_country_blocks(estimates, catalog, type_means, plan)

    draws_path = os.path.join(outdir, "bootstrap_draws.csv")
    export_draws(result, "type_mean", draws_path)

    full = type_means(estimates)
    summary_rows = []
    for dtype in sorted(full):
        summary = summarize_bootstrap(result.values(key=dtype), full[dtype])
        summary_rows.append((scheme, f"type_mean:{dtype}", summary["point"],
                             summary["ci_lo"], summary["ci_hi"], summary["p_value"],
                             summary["n_draws"]))
    summary_path = os.path.join(outdir, "bootstrap_summary.csv")
    pd.DataFrame(summary_rows,
                 columns=["scheme", "statistic", "point", "ci_lo", "ci_hi", "p_value", "n_draws"]) \
        .to_csv(summary_path, index=False, lineterminator="\n", float_format="%.12g")

    write_manifest(outdir, "bootstrap",
                   {"scheme": scheme, "draws": draws, "drop_count": drop_count, "seed": seed},
                   inputs={"estimates": estimates_path, "events": events},
                   outputs={"draws": draws_path, "summary": summary_path})
    click.echo(f"{len(result.draws)} draws ({result.n_missing} missing)")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--reporting", required=True)
@click.option("--affected", required=True)
@click.option("--dtype", required=True)
@click.option("--deaths", type=int, default=100, show_default=True)
@click.option("--grid-min", type=int, default=10, show_default=True)
@click.option("--grid-max", type=int, default=300, show_default=True)
@click.option("--grid-step", type=int, default=5, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@guarded
def counterfactual(model_path, features_path, reporting, affected, dtype, deaths,
                   grid_min, grid_max, grid_step, out):
    """Predicted attention curve and equivalent-attention tolls for a scenario."""
    outdir = _outdir(out)
    model = load_model(model_path)
    features = load_features(features_path)
    grid = tuple(range(grid_min, grid_max + 1, grid_step))

    countries = features.countries()
    scenarios = [(reporting, other, dtype) for other in countries if other != reporting]
    grids, skipped = simulate_grid(model, scenarios, features, deaths_grid=grid)
    by_affected = {g.affected_country: g for g in grids}
    if affected not in by_affected:
        raise ValueError(f"no dyadic features for pair ({reporting}, {affected})")
    target = by_affected[affected]

    grid_path = os.path.join(outdir, "counterfactual_grid.csv")
    grids_to_frame(grids).to_csv(grid_path, index=False, lineterminator="\n",
                                 float_format="%.12g")

    eq_rows = []
    for other, query in sorted(by_affected.items()):
        if other == affected:
            continue
        eq = equivalent_deaths(target, query, deaths)
        eq_rows.append((reporting, affected, other, dtype, deaths,
                        "" if eq.deaths_star is None else f"{eq.deaths_star:.4f}",
                        eq.out_of_range,
                        "" if eq.nearest_endpoint is None else f"{eq.nearest_endpoint:g}"))
    eq_path = os.path.join(outdir, "equivalents.csv")
    pd.DataFrame(eq_rows, columns=["reporting", "affected", "query_country", "dtype",
                                   "deaths_ref", "deaths_star", "out_of_range",
                                   "nearest_endpoint"]) \
        .to_csv(eq_path, index=False, lineterminator="\n")

    write_manifest(outdir, "counterfactual",
                   {"reporting": reporting, "affected": affected, "dtype": dtype,
                    "deaths": deaths, "grid_min": grid_min, "grid_max": grid_max,
                    "grid_step": grid_step},
                   inputs={"model": model_path, "features": features_path},
                   outputs={"grid": grid_path, "equivalents": eq_path})
    click.echo(f"wrote {len(grids)} curves ({len(skipped)} pairs skipped)")


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@guarded
def serve(model_path, features_path, host, port):
    """Serve the /v1 explorer API against an immutable model snapshot."""
    from dyadnews.manifest import sha256_file
    from dyadnews.service import build_snapshot, serve as run_server

    model = load_model(model_path)
    features = load_features(features_path)
    snapshot = build_snapshot(model, features, model_hash=sha256_file(model_path))
    run_server(snapshot, host=host, port=port)


def main():
    cli(prog_name="dyadnews")


if __name__ == "__main__":
    main()
