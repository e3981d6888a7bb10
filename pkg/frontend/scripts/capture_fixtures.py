"""Capture /v1 payloads from the reference synthetic world into fixtures/.

Regenerates the reference world, runs the estimation pipeline, trains the
forest snapshot, and records the JSON responses (including error cases) that
the explorer tests replay through the fixture server.  Rerun after any change
to the API payload shapes:

    python3 frontend/scripts/capture_fixtures.py
"""

import json
import pathlib
import tempfile
import warnings

from fastapi.testclient import TestClient

from dyadnews.catalog import load_events
from dyadnews.estimator import run_estimation
from dyadnews.features import load_features
from dyadnews.forest import ForestConfig, build_training_frame, train_forest
from dyadnews.panel import ingest_counts
from dyadnews.service import build_snapshot, create_app
from dyadnews.synthetic import PRESETS, generate_world, write_world

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

REQUESTS = {
    "meta": ("/v1/meta", {}),
    "counterfactual_DEU_BGD_storm_100": (
        "/v1/counterfactual",
        {"reporting": "DEU", "affected": "BGD", "dtype": "storm", "deaths": 100},
    ),
    "view_disaster_BGD_storm_100": (
        "/v1/view",
        {"view": "disaster", "country": "BGD", "dtype": "storm", "deaths": 100},
    ),
    "view_reporting_DEU_storm_100": (
        "/v1/view",
        {"view": "reporting", "country": "DEU", "dtype": "storm", "deaths": 100},
    ),
    "error_unknown_dtype": (
        "/v1/counterfactual",
        {"reporting": "DEU", "affected": "BGD", "dtype": "tsunami", "deaths": 100},
    ),
    "error_unknown_country": (
        "/v1/counterfactual",
        {"reporting": "XXX", "affected": "BGD", "dtype": "storm", "deaths": 100},
    ),
    "error_deaths_outside_grid": (
        "/v1/counterfactual",
        {"reporting": "DEU", "affected": "BGD", "dtype": "storm", "deaths": 5000},
    ),
    "error_own_country_pair": (
        "/v1/counterfactual",
        {"reporting": "DEU", "affected": "DEU", "dtype": "storm", "deaths": 100},
    ),
}


def main():
    with tempfile.TemporaryDirectory() as tmp:
        outdir = pathlib.Path(tmp)
        print("generating the reference world...")
        write_world(generate_world(PRESETS["reference"]), outdir)
        store = ingest_counts(outdir / "counts.csv", outdir / "registry.csv")
        catalog = load_events(outdir / "events.csv")
        features = load_features(outdir / "features.csv")
        print("estimating 300 events...")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            estimates = run_estimation(store, catalog)
        print("training the forest snapshot...")
        frame = build_training_frame(estimates, features, catalog)
        model = train_forest(frame, ForestConfig(n_trees=200, seed=0))
        client = TestClient(create_app(build_snapshot(model, features)))

        FIXTURES.mkdir(exist_ok=True)
        for name, (path, params) in REQUESTS.items():
            response = client.get(path, params=params)
            payload = {
                "path": path,
                "query": {k: str(v) for k, v in params.items()},
                "status": response.status_code,
                "body": response.json(),
            }
            target = FIXTURES / f"{name}.json"
            target.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            print(f"wrote {target.name} (status {response.status_code})")


if __name__ == "__main__":
    main()
