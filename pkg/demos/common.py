"""Shared setup for the demo scripts: a cached synthetic world and estimates.

The first script run writes the world and the estimates table into
``demos/artifacts/``; later runs (and later scripts) reuse them, so each demo
stays fast and they all talk about the same data.
"""

import pathlib
import warnings

import pandas as pd

from dyadnews.catalog import load_events
from dyadnews.estimator import export_estimates, run_estimation
from dyadnews.features import load_features
from dyadnews.panel import ingest_counts
from dyadnews.synthetic import PRESETS, generate_world, write_world

ARTIFACTS = pathlib.Path(__file__).resolve().parent / "artifacts"


def demo_world_dir() -> pathlib.Path:
    ARTIFACTS.mkdir(exist_ok=True)
    if not (ARTIFACTS / "counts.csv").exists():
        print("generating the demo world (50 sources, 25 countries, 40 events)...")
        write_world(generate_world(PRESETS["demo"]), ARTIFACTS)
    return ARTIFACTS


def demo_store():
    d = demo_world_dir()
    return ingest_counts(d / "counts.csv", d / "registry.csv")


def demo_catalog():
    return load_events(demo_world_dir() / "events.csv")


def demo_features():
    return load_features(demo_world_dir() / "features.csv")


def demo_estimates() -> pd.DataFrame:
    d = demo_world_dir()
    path = d / "estimates.csv"
    if not path.exists():
        print("estimating all 40 events (a few seconds)...")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            estimates = run_estimation(demo_store(), demo_catalog())
        export_estimates(estimates, path)
    return pd.read_csv(path, dtype={"event_id": str, "flags": str}).fillna({"flags": ""})
