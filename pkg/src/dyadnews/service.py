"""HTTP/JSON service backing the interactive explorer.

Stateless, read-only endpoints under ``/v1`` against an immutable model
snapshot: counterfactual curves with equivalent-attention tolls, percentile-
normalized comparison views, and metadata.  Responses are pure functions of
(model snapshot, query).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
import pandas as pd
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from dyadnews.counterfactual import (
    DEFAULT_DEATHS_GRID,
    ScenarioGrid,
    equivalent_deaths,
    normalize_view,
    simulate_grid,
)
from dyadnews.features import FeatureMatrix
from dyadnews.forest import ForestModel


@dataclass
class ModelSnapshot:
    """Everything a request needs, swapped atomically on reload."""

    model: ForestModel
    features: FeatureMatrix
    countries: list[str]
    dtypes: list[str]
    deaths_grid: tuple[int, ...]
    model_hash: str
    default_duration: float = 1.0


def build_snapshot(model: ForestModel, features: FeatureMatrix,
                   deaths_grid=DEFAULT_DEATHS_GRID, model_hash: str | None = None,
                   default_duration: float = 1.0) -> ModelSnapshot:
    if model_hash is None:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(model.train_X).tobytes())
        digest.update(np.ascontiguousarray(model.train_y).tobytes())
        digest.update(repr(model.config).encode())
        model_hash = digest.hexdigest()
    return ModelSnapshot(
        model=model,
        features=features,
        countries=features.countries(),
        dtypes=list(model.dtype_categories),
        deaths_grid=tuple(int(d) for d in deaths_grid),
        model_hash=model_hash,
        default_duration=default_duration,
    )


def _error(status: int, code: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code})


def _grid_for(snapshot: ModelSnapshot, reporting: str, affected: str, dtype: str):
    grids, skipped = simulate_grid(
        snapshot.model, [(reporting, affected, dtype)], snapshot.features,
        deaths_grid=snapshot.deaths_grid, duration_days=snapshot.default_duration,
    )
    return grids[0] if grids else None


def _all_pair_grids(snapshot: ModelSnapshot, dtype: str) -> list[ScenarioGrid]:
    scenarios = [
        (r, a, dtype)
        for r in snapshot.countries
        for a in snapshot.countries
        if r != a
    ]
    grids, _ = simulate_grid(
        snapshot.model, scenarios, snapshot.features,
        deaths_grid=snapshot.deaths_grid, duration_days=snapshot.default_duration,
    )
    return grids


def create_app(snapshot: ModelSnapshot | None) -> FastAPI:
    app = FastAPI(title="dyadnews explorer API", version="1")
    app.state.snapshot = snapshot

    def current() -> ModelSnapshot | None:
        return app.state.snapshot

    @app.get("/v1/meta")
    def meta():
        snap = current()
        if snap is None:
            return _error(503, "model_not_loaded")
        return {
            "countries": snap.countries,
            "dtypes": snap.dtypes,
            "grid": {
                "min": snap.deaths_grid[0],
                "max": snap.deaths_grid[-1],
                "step": snap.deaths_grid[1] - snap.deaths_grid[0],
            },
            "model_hash": snap.model_hash,
        }

    @app.get("/v1/counterfactual")
    def counterfactual(reporting: str, affected: str, dtype: str, deaths: int):
        snap = current()
        if snap is None:
            return _error(503, "model_not_loaded")
        for country in (reporting, affected):
            if country not in snap.countries:
                return _error(400, "unknown_country")
        if dtype not in snap.dtypes:
            return _error(400, "unknown_dtype")
        if reporting == affected:
            return _error(400, "own_country_pair")
        if not (snap.deaths_grid[0] <= deaths <= snap.deaths_grid[-1]):
            return _error(400, "deaths_outside_grid")

        target = _grid_for(snap, reporting, affected, dtype)
        if target is None:
            return _error(400, "missing_dyad_features")
        beta_at = float(np.interp(deaths, target.deaths, target.beta_hat))

        equivalents = []
        for other in snap.countries:
            if other in (affected, reporting):
                continue
            query = _grid_for(snap, reporting, other, dtype)
            if query is None:
                continue
            eq = equivalent_deaths(target, query, deaths)
            if eq.out_of_range:
                equivalents.append({"country": other, "out_of_range": True,
                                    "nearest_endpoint": eq.nearest_endpoint})
            else:
                equivalents.append({"country": other, "deaths_star": round(eq.deaths_star, 4)})

        return {
            "reporting": reporting,
            "affected": affected,
            "dtype": dtype,
            "deaths": deaths,
            "beta_hat": beta_at,
            "curve": [
                {"deaths": int(d), "beta_hat": float(b)}
                for d, b in zip(target.deaths, target.beta_hat)
            ],
            "equivalents": equivalents,
        }

    @app.get("/v1/view")
    def view(view: str, country: str, dtype: str, deaths: int):
        snap = current()
        if snap is None:
            return _error(503, "model_not_loaded")
        if view not in ("reporting", "disaster"):
            return _error(400, "unknown_view")
        if country not in snap.countries:
            return _error(400, "unknown_country")
        if dtype not in snap.dtypes:
            return _error(400, "unknown_dtype")
        if not (snap.deaths_grid[0] <= deaths <= snap.deaths_grid[-1]):
            return _error(400, "deaths_outside_grid")

        grids = _all_pair_grids(snap, dtype)
        rows = []
        for g in grids:
            rows.append((g.report_country, g.affected_country,
                         float(np.interp(deaths, g.deaths, g.beta_hat))))
        table = pd.DataFrame(rows, columns=["report_country", "affected_country", "beta_hat"])

        if view == "disaster":
            normalized = normalize_view(table, "country_of_disaster")
            unit_col, counterpart_col = "affected_country", "report_country"
        else:
            normalized = normalize_view(table, "country_of_reporting")
            unit_col, counterpart_col = "report_country", "affected_country"

        sub = normalized.values[normalized.values[unit_col] == country]
        norm_by_counterpart = dict(zip(sub[counterpart_col], sub["norm_value"]))
        undefined = country in normalized.undefined_units or country in normalized.skipped_units
        values = []
        for other in snap.countries:
            if other == country:
                continue
            norm = norm_by_counterpart.get(other)
            values.append({
                "country": other,
                "norm_value": None if (undefined or norm is None or not np.isfinite(norm))
                else float(norm),
            })
        return {
            "view": view,
            "country": country,
            "dtype": dtype,
            "deaths": deaths,
            "undefined": bool(undefined),
            "values": values,
        }

    return app


def serve(snapshot: ModelSnapshot, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(snapshot), host=host, port=port)
