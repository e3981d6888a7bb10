"""Simulated-disaster prediction grids, percentile normalizations, and
equivalent-attention inversion.

Forest-predicted attention curves over a fatality grid are step-like and may
locally invert, so inversion first applies pool-adjacent-violators isotonic
smoothing; crossings are then well defined and the smallest one is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import isotonic_regression

from dyadnews.forest import ForestModel, predict

DEFAULT_DEATHS_GRID = tuple(range(10, 301, 5))
MIN_UNIT_VALUES = 20


class CounterfactualError(ValueError):
    """Raised on invalid scenario or normalization inputs."""


@dataclass(frozen=True)
class ScenarioGrid:
    report_country: str
    affected_country: str
    dtype: str
    deaths: np.ndarray
    beta_hat: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deaths)
        if len(d) < 2 or not np.all(np.diff(d) > 0):
            raise CounterfactualError("deaths grid must be strictly ascending")
        if not np.all(np.isfinite(self.beta_hat)):
            raise CounterfactualError("grid predictions must be finite")

    def isotonic(self) -> np.ndarray:
        return isotonic_regression(np.asarray(self.beta_hat, dtype=float)).x


def simulate_grid(model: ForestModel, scenarios, features,
                  deaths_grid=DEFAULT_DEATHS_GRID, duration_days: float = 1.0):
    """Predicted attention curves for (reporting, affected, dtype) scenarios over
    the fatality grid.

    Pairs whose dyadic features are unavailable are skipped and reported.
    Returns (grids, skipped)."""
    deaths = np.asarray(sorted(deaths_grid), dtype=float)
    grids: list[ScenarioGrid] = []
    skipped: list[tuple[str, str, str]] = []
    dyadic = [f for f in model.base_features if f not in ("dtype", "log_deaths", "duration_days")]
    for reporting, affected, dtype in scenarios:
        row = {}
        if dyadic:
            try:
                pair = features.lookup(reporting, affected)
            except KeyError:
                skipped.append((reporting, affected, dtype))
                continue
            vals = {f: pair.get(f, np.nan) for f in dyadic}
            if any(not np.isfinite(v) for v in vals.values()):
                skipped.append((reporting, affected, dtype))
                continue
            row.update(vals)
        frame = pd.DataFrame([row | {"dtype": dtype} for _ in deaths])
        frame["log_deaths"] = np.log1p(deaths)
        frame["duration_days"] = duration_days
        beta = predict(model, frame)
        grids.append(ScenarioGrid(reporting, affected, dtype, deaths, beta))
    return grids, skipped


def grids_to_frame(grids) -> pd.DataFrame:
    rows = []
    for g in grids:
        for d, b in zip(g.deaths, g.beta_hat):
            rows.append((g.report_country, g.affected_country, g.dtype, int(d), b))
    return pd.DataFrame(rows, columns=["report_country", "affected_country", "dtype", "deaths", "beta_hat"])


@dataclass(frozen=True)
class NormalizedView:
    view: str                       # country_of_disaster | country_of_reporting
    values: pd.DataFrame            # input rows + norm_value
    anchors: dict = field(default_factory=dict)  # unit -> (p5, p95)
    undefined_units: tuple = ()
    skipped_units: tuple = ()


def normalize_view(beta_table: pd.DataFrame, view: str,
                   min_unit_values: int = MIN_UNIT_VALUES) -> NormalizedView:
    """Percentile normalization per conditioning unit: the linear map sending
    [P5, P95] to [-1, 1], with values outside clamped to the endpoints.

    ``country_of_disaster`` conditions on the affected country (comparing
    reporting countries); ``country_of_reporting`` conditions on the reporting
    country (comparing affected countries).  Units with fewer than
    ``min_unit_values`` values are skipped; P95 == P5 marks a unit undefined.
    """
    if view == "country_of_disaster":
        unit_col = "affected_country"
    elif view == "country_of_reporting":
        unit_col = "report_country"
    else:
        raise CounterfactualError(f"unknown view {view!r}")
    required = {"report_country", "affected_country", "beta_hat"}
    if not required.issubset(beta_table.columns):
        raise CounterfactualError(f"beta table must carry columns {sorted(required)}")

    out = beta_table.copy()
    out["norm_value"] = np.nan
    anchors: dict[str, tuple[float, float]] = {}
    undefined, skipped = [], []
    for unit, sub in out.groupby(unit_col):
        vals = sub["beta_hat"].to_numpy(dtype=float)
        if len(vals) < min_unit_values:
            skipped.append(unit)
            continue
        p5, p95 = np.percentile(vals, [5, 95])
        if p95 == p5:
            undefined.append(unit)
            continue
        norm = 2.0 * (vals - p5) / (p95 - p5) - 1.0
        out.loc[sub.index, "norm_value"] = np.clip(norm, -1.0, 1.0)
        anchors[unit] = (float(p5), float(p95))
    kept = out[unit_col].isin(anchors)
    return NormalizedView(
        view=view,
        values=out[kept].reset_index(drop=True),
        anchors=anchors,
        undefined_units=tuple(undefined),
        skipped_units=tuple(skipped),
    )


@dataclass(frozen=True)
class Equivalent:
    deaths_star: float | None
    out_of_range: bool
    nearest_endpoint: float | None = None


def _interp_at(deaths: np.ndarray, curve: np.ndarray, d: float) -> float:
    return float(np.interp(d, deaths, curve))


def equivalent_deaths(grid_target: ScenarioGrid, grid_query: ScenarioGrid,
                      deaths_ref: float) -> Equivalent:
    """Fatality count at which the query curve matches the target curve's value
    at ``deaths_ref``.

    Both curves are PAVA-smoothed; the smallest crossing of the monotone
    piecewise-linear query curve is returned.  A target value outside the
    query curve's range yields an out-of-range marker with the nearest
    endpoint."""
    if len(grid_target.deaths) != len(grid_query.deaths) or \
            not np.array_equal(grid_target.deaths, grid_query.deaths):
        raise CounterfactualError("target and query grids must share the death axis")
    deaths = np.asarray(grid_target.deaths, dtype=float)
    if deaths_ref < deaths[0] or deaths_ref > deaths[-1]:
        raise CounterfactualError(f"deaths_ref {deaths_ref} outside the grid")

    target_curve = grid_target.isotonic()
    query_curve = grid_query.isotonic()
    value = _interp_at(deaths, target_curve, deaths_ref)

    lo, hi = float(query_curve[0]), float(query_curve[-1])
    if value < lo or value > hi or lo == hi:
        nearest = deaths[0] if abs(value - lo) <= abs(value - hi) else deaths[-1]
        return Equivalent(deaths_star=None, out_of_range=True, nearest_endpoint=float(nearest))

    # smallest crossing: first grid segment whose right endpoint reaches the value
    for k in range(len(deaths)):
        if query_curve[k] >= value:
            if k == 0 or query_curve[k] == value:
                # walk left through any plateau at the value
                j = k
                while j > 0 and query_curve[j - 1] == value:
                    j -= 1
                return Equivalent(deaths_star=float(deaths[j]), out_of_range=False)
            d0, d1 = deaths[k - 1], deaths[k]
            v0, v1 = query_curve[k - 1], query_curve[k]
            frac = (value - v0) / (v1 - v0)
            return Equivalent(deaths_star=float(d0 + frac * (d1 - d0)), out_of_range=False)
    return Equivalent(deaths_star=None, out_of_range=True, nearest_endpoint=float(deaths[-1]))
