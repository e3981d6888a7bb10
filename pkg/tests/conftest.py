import warnings

import pandas as pd
import pytest

from dyadnews.catalog import load_events
from dyadnews.estimator import run_estimation
from dyadnews.features import load_features
from dyadnews.panel import ingest_counts
from dyadnews.synthetic import PRESETS, WorldConfig, generate_world, write_world

# Small deterministic world used by most estimator-level tests.  Frozen test
# constants elsewhere depend on this exact configuration and seed.
TINY_CONFIG = WorldConfig(
    n_sources=6, n_countries=3, n_days=40, n_events=3,
    base_log_rate_mean=3.0, type_effects={"earthquake": 0.3, "flood": 0.0},
    death_gradient=0.0, interaction_slope=0.0, seed=123,
)


@pytest.fixture(scope="session")
def tiny_world_dir(tmp_path_factory):
    world = generate_world(TINY_CONFIG)
    outdir = tmp_path_factory.mktemp("tiny_world")
    write_world(world, outdir)
    return outdir


@pytest.fixture(scope="session")
def tiny_store(tiny_world_dir):
    return ingest_counts(tiny_world_dir / "counts.csv", tiny_world_dir / "registry.csv")


@pytest.fixture(scope="session")
def tiny_catalog(tiny_world_dir):
    return load_events(tiny_world_dir / "events.csv")


@pytest.fixture(scope="session")
def demo_world_dir(tmp_path_factory):
    world = generate_world(PRESETS["demo"])
    outdir = tmp_path_factory.mktemp("demo_world")
    write_world(world, outdir)
    return outdir


@pytest.fixture(scope="session")
def demo_store(demo_world_dir):
    return ingest_counts(demo_world_dir / "counts.csv", demo_world_dir / "registry.csv")


@pytest.fixture(scope="session")
def demo_catalog(demo_world_dir):
    return load_events(demo_world_dir / "events.csv")


@pytest.fixture(scope="session")
def demo_features(demo_world_dir):
    return load_features(demo_world_dir / "features.csv")


@pytest.fixture(scope="session")
def demo_estimates(demo_store, demo_catalog, demo_world_dir):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        estimates = run_estimation(demo_store, demo_catalog)
    estimates.to_csv(demo_world_dir / "estimates.csv", index=False,
                     lineterminator="\n", float_format="%.12g")
    return estimates


@pytest.fixture(scope="session")
def demo_truth(demo_world_dir):
    return pd.read_csv(demo_world_dir / "truth.csv", dtype={"event_id": str})
