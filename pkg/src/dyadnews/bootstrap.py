"""Block bootstraps over events and country blocks, with CI/p-value construction.

Draws resample the fixed set of per-event estimates (the downstream statistics
are recomputed per draw; the inner event regressions are not re-fit).  Every
draw uses a counter-based substream of the plan seed, so the distribution is
identical regardless of execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

SCHEMES = ("event_half", "disaster_country_drop", "reporting_country_drop")
MAX_MISSING_SHARE = 0.20


class BootstrapError(ValueError):
    """Raised on invalid plans or degenerate draw distributions."""


@dataclass(frozen=True)
class BootstrapPlan:
    scheme: str = "event_half"
    n_draws: int = 100
    drop_count: int = 50
    seed: int = 0

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise BootstrapError(f"unknown scheme {self.scheme!r}")
        if self.n_draws < 2:
            raise BootstrapError("n_draws must be at least 2 (intervals need spread)")


@dataclass(frozen=True)
class BootstrapResult:
    plan: BootstrapPlan
    draws: list          # one statistic value (scalar or dict) per non-missing draw
    n_missing: int

    def values(self, key=None) -> np.ndarray:
        if key is None:
            return np.asarray([d for d in self.draws], dtype=float)
        out = []
        for d in self.draws:
            if key in d and np.isfinite(d[key]):
                out.append(d[key])
        return np.asarray(out, dtype=float)


def _run_draws(plan: BootstrapPlan, one_draw) -> BootstrapResult:
    draws, n_missing = [], 0
    for b in range(plan.n_draws):
        rng = np.random.default_rng([plan.seed, b])
        try:
            value = one_draw(rng)
        except Exception:
            value = None
        if value is None:
            n_missing += 1
        else:
            draws.append(value)
    if n_missing > MAX_MISSING_SHARE * plan.n_draws:
        raise BootstrapError(
            f"{n_missing}/{plan.n_draws} draws missing exceeds the {MAX_MISSING_SHARE:.0%} budget"
        )
    return BootstrapResult(plan=plan, draws=draws, n_missing=n_missing)


def bootstrap_events(estimates: pd.DataFrame, statistic, plan: BootstrapPlan) -> BootstrapResult:
    """Per draw, keep a random 50% of events (without replacement) and recompute
    the statistic on the surviving estimates."""
    plan.validate()
    if plan.scheme != "event_half":
        raise BootstrapError(f"bootstrap_events expects scheme 'event_half', got {plan.scheme!r}")
    event_ids = np.asarray(sorted(estimates["event_id"].unique()))
    if len(event_ids) < 4:
        raise BootstrapError("event bootstrap needs at least 4 events")
    n_keep = len(event_ids) // 2

    def one_draw(rng):
        keep = set(rng.choice(event_ids, size=n_keep, replace=False))
        sub = estimates[estimates["event_id"].isin(keep)]
        return statistic(sub)

    return _run_draws(plan, one_draw)


def bootstrap_country_blocks(estimates: pd.DataFrame, catalog, statistic,
                             plan: BootstrapPlan) -> BootstrapResult:
    """Per draw, remove ``drop_count`` disaster-affected countries (with all their
    events) or reporting countries (with all their estimates), then recompute."""
    plan.validate()
    if plan.scheme == "disaster_country_drop":
        population = np.asarray(catalog.affected_countries())
        event_country = dict(zip(catalog.to_frame()["event_id"], catalog.to_frame()["country"]))
        row_country = estimates["event_id"].map(event_country)
    elif plan.scheme == "reporting_country_drop":
        population = np.asarray(sorted(estimates["report_country"].unique()))
        row_country = estimates["report_country"]
    else:
        raise BootstrapError(f"bootstrap_country_blocks got scheme {plan.scheme!r}")
    if plan.drop_count >= len(population):
        raise BootstrapError(
            f"drop_count {plan.drop_count} must be below the population size {len(population)}"
        )

    def one_draw(rng):
        dropped = set(rng.choice(population, size=plan.drop_count, replace=False))
        sub = estimates[~row_country.isin(dropped)]
        return statistic(sub)

    return _run_draws(plan, one_draw)


def summarize_bootstrap(values, point: float) -> dict:
    """Percentile 95% CI and a two-sided sign p-value from the draw distribution,
    floored at 1/n_draws."""
    v = np.asarray([x for x in values if np.isfinite(x)], dtype=float)
    if len(v) < 2:
        raise BootstrapError("need at least 2 non-missing draws to summarize")
    ci_lo, ci_hi = np.percentile(v, [2.5, 97.5])
    share_le = float(np.mean(v <= 0))
    share_ge = float(np.mean(v >= 0))
    p = max(2.0 * min(share_le, share_ge), 1.0 / len(v))
    p = min(p, 1.0)
    return {"point": float(point), "ci_lo": float(ci_lo), "ci_hi": float(ci_hi),
            "p_value": p, "n_draws": len(v)}


def export_draws(result: BootstrapResult, statistic_name: str, path) -> None:
    """Export `scheme,statistic,draw_id,value` rows (dict-valued draws expand)."""
    rows = []
    for b, draw in enumerate(result.draws):
        if isinstance(draw, dict):
            for key in sorted(draw):
                rows.append((result.plan.scheme, f"{statistic_name}:{key}", b, draw[key]))
        else:
            rows.append((result.plan.scheme, statistic_name, b, draw))
    pd.DataFrame(rows, columns=["scheme", "statistic", "draw_id", "value"]).to_csv(
        path, index=False, lineterminator="\n", float_format="%.12g"
    )
