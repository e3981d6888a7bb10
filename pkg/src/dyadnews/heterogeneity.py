"""Death-gradient analyses and the six-specification connectedness regressions.

Dependent variable throughout is the per-(event, reporting country) attention
estimate.  Deaths always enter as ln(1 + deaths) so zero-death events are
admissible.  Fixed-effect controls are absorbed by (optionally weighted)
iterated within-group demeaning.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import pandas as pd

from dyadnews.features import FeatureMatrix, zscore_columns

# control ladder: spec_id -> fixed-effect groups to absorb
SPEC_CONTROLS = {
    1: (),
    2: ("event_country",),
    3: ("report_country",),
    4: ("event_country", "report_country"),
    5: ("event_id",),
    6: ("event_country", "report_country", "event_id"),
}

SPEC_RESULT_COLUMNS = ["feature", "spec_id", "mode", "coef", "se", "t", "n", "flags"]


class HeterogeneityError(ValueError):
    """Raised on inputs that cannot support the requested analysis."""


def _defined(estimates: pd.DataFrame) -> pd.DataFrame:
    return estimates[~estimates["flags"].str.contains("undefined", na=False)]


def _analysis_frame(estimates: pd.DataFrame, catalog, use_shrunk: bool = False) -> pd.DataFrame:
    cat = catalog.to_frame()[["event_id", "country", "dtype", "deaths"]]
    cat = cat.rename(columns={"country": "event_country"})
    df = _defined(estimates).merge(cat, on="event_id", how="inner").copy()
    df["value"] = df["beta_shrunk" if use_shrunk else "beta"].astype(float)
    df["log_deaths"] = np.log1p(df["deaths"].astype(float))
    return df


def binned_death_curve(estimates: pd.DataFrame, catalog, n_bins: int = 50,
                       residualize_dtype: bool = False, use_shrunk: bool = False) -> pd.DataFrame:
    """Binned scatter of the attention estimates against casualties.

    Events are split into quantile bins of ln(1 + deaths); each bin reports the
    mean estimate and mean deaths.  Optionally the estimates are residualized
    on disaster type first (grand mean added back).
    """
    df = _analysis_frame(estimates, catalog, use_shrunk)
    n_events = df["event_id"].nunique()
    if n_events == 0:
        raise HeterogeneityError("no defined estimates to bin")
    if n_events < n_bins:
        warnings.warn(f"only {n_events} events with estimates; reducing bins from {n_bins}")
        n_bins = n_events

    if residualize_dtype:
        grand = df["value"].mean()
        df["value"] = df["value"] - df.groupby("dtype")["value"].transform("mean") + grand

    per_event = df.groupby("event_id").agg(log_deaths=("log_deaths", "first"),
                                           deaths=("deaths", "first"))
    per_event["bin"] = pd.qcut(per_event["log_deaths"].rank(method="first"),
                               q=n_bins, labels=False)
    df = df.merge(per_event[["bin"]], on="event_id")
    out = (
        df.groupby("bin")
        .agg(mean_beta=("value", "mean"), mean_deaths=("deaths", "mean"),
             mean_log_deaths=("log_deaths", "mean"), n_estimates=("value", "size"))
        .reset_index()
        .sort_values("mean_log_deaths")
        .reset_index(drop=True)
    )
    return out


def _ols(y: np.ndarray, X: np.ndarray):
    """Classical OLS: coefficients, SEs, residuals."""
    XtX = X.T @ X
    A = np.linalg.pinv(XtX)
    beta = A @ (X.T @ y)
    resid = y - X @ beta
    dof = max(len(y) - np.linalg.matrix_rank(XtX), 1)
    sigma2 = float(resid @ resid) / dof
    se = np.sqrt(np.clip(sigma2 * np.diag(A), 0.0, None))
    return beta, se, resid


@dataclass(frozen=True)
class GradientResult:
    report_country: str
    xi: float              # baseline increase (intercept-only fit)
    nu: float              # death gradient
    ratio: float           # nu / xi, NaN when undefined
    se_xi: float
    se_nu: float
    n_events: int
    flags: str = ""


def death_gradient_by_country(estimates: pd.DataFrame, catalog, min_events: int = 10,
                              use_shrunk: bool = False) -> list[GradientResult]:
    """Per reporting country: baseline increase and the slope in ln(1 + deaths).

    Two regressions per country (with and without the deaths regressor); the
    ratio relates the gradient to the without-deaths baseline.  Countries below
    the event floor are omitted.
    """
    df = _analysis_frame(estimates, catalog, use_shrunk)
    results = []
    for country, sub in df.groupby("report_country"):
        n_events = sub["event_id"].nunique()
        if n_events < min_events:
            continue
        y = sub["value"].to_numpy()
        xi = float(y.mean())
        se_xi = float(y.std(ddof=1) / np.sqrt(len(y))) if len(y) > 1 else np.nan
        ld = sub["log_deaths"].to_numpy()
        if np.ptp(ld) == 0:
            results.append(GradientResult(country, xi, np.nan, np.nan, se_xi, np.nan,
                                          n_events, "no_death_variation"))
            continue
        X = np.column_stack([np.ones(len(y)), ld])
        beta, se, _ = _ols(y, X)
        nu = float(beta[1])
        if xi == 0.0:
            ratio, flags = np.nan, "ratio_undefined"
        else:
            ratio, flags = nu / xi, ""
        results.append(GradientResult(country, xi, nu, ratio, se_xi, float(se[1]),
                                      n_events, flags))
    return results


def _absorb(columns: np.ndarray, groups: list[np.ndarray], weights: np.ndarray | None = None,
            tol: float = 1e-10, max_sweeps: int = 200) -> np.ndarray:
    """Iterated (weighted) within-group demeaning over multiple groupings."""
    X = np.array(columns, dtype=float, copy=True)
    if X.ndim == 1:
        X = X[:, None]
    w = np.ones(len(X)) if weights is None else np.asarray(weights, dtype=float)
    sizes = [np.bincount(g, weights=w) for g in groups]
    for _ in range(max_sweeps):
        for g, size in zip(groups, sizes):
            for k in range(X.shape[1]):
                means = np.bincount(g, weights=w * X[:, k]) / size
                X[:, k] -= means[g]
        worst = 0.0
        for g, size in zip(groups, sizes):
            for k in range(X.shape[1]):
                means = np.bincount(g, weights=w * X[:, k]) / size
                worst = max(worst, float(np.abs(means).max(initial=0.0)))
        if worst < tol:
            break
    return X


def connectedness_regression(estimates: pd.DataFrame, features: FeatureMatrix, catalog,
                             mode: str, spec_id: int, feature: str,
                             use_shrunk: bool = False,
                             precision_weighted: bool = False) -> dict:
    """One (feature, spec) regression of the attention estimates on a z-scored
    connectedness feature.

    ``mode='univariate'`` reports the feature's own coefficient; in
    ``mode='interaction'`` the reported coefficient is on
    feature x ln(1 + deaths), with the deaths main effect absorbed by event
    fixed effects when present and entered explicitly otherwise.
    """
    if mode not in ("univariate", "interaction"):
        raise HeterogeneityError(f"unknown mode {mode!r}")
    if spec_id not in SPEC_CONTROLS:
        raise HeterogeneityError(f"spec_id must be in 1..6, got {spec_id}")
    if feature not in features.features:
        raise HeterogeneityError(f"feature {feature!r} not in feature table")

    df = _analysis_frame(estimates, catalog, use_shrunk)
    z = zscore_columns(features.table[[feature]])
    df = df.merge(
        z.rename(columns={feature: "w"}),
        left_on=["report_country", "event_country"],
        right_index=True, how="left",
    )

    total = len(df)
    df = df[np.isfinite(df["w"])]
    if total == 0 or len(df) <= 0.1 * total:
        warnings.warn(f"feature {feature!r} missing for more than 90% of rows; skipped")
        return {"feature": feature, "spec_id": spec_id, "mode": mode,
                "coef": np.nan, "se": np.nan, "t": np.nan, "n": len(df), "flags": "skipped_missing"}

    controls = SPEC_CONTROLS[spec_id]
    has_event_fe = "event_id" in controls

    if mode == "univariate":
        cols = [df["w"].to_numpy()]
        names = ["w"]
        report = "w"
    else:
        cols = [df["w"].to_numpy(), (df["w"] * df["log_deaths"]).to_numpy()]
        names = ["w", "w_x_log_deaths"]
        if not has_event_fe:
            cols.append(df["log_deaths"].to_numpy())
            names.append("log_deaths")
        report = "w_x_log_deaths"

    y = df["value"].to_numpy()
    weights = None
    if precision_weighted:
        se = df["se"].to_numpy(dtype=float)
        usable = np.isfinite(se) & (se > 0)
        if not usable.all():
            df = df[usable]
            y = y[usable]
            cols = [c[usable] for c in cols]
            se = se[usable]
        weights = 1.0 / np.square(se)

    groups = [np.zeros(len(df), dtype=np.int64)]  # constant: absorbs the intercept
    for name in controls:
        groups.append(pd.factorize(df[name])[0].astype(np.int64))

    Z = _absorb(np.column_stack(cols + [y]), groups, weights=weights)
    Xd, yd = Z[:, :-1], Z[:, -1]
    if weights is not None:
        scale = np.sqrt(weights)
        Xd = Xd * scale[:, None]
        yd = yd * scale

    idx = names.index(report)
    col_ss = float(Xd[:, idx] @ Xd[:, idx])
    if col_ss < 1e-12 * len(df):
        return {"feature": feature, "spec_id": spec_id, "mode": mode,
                "coef": np.nan, "se": np.nan, "t": np.nan, "n": len(df), "flags": "undefined"}

    beta, se, _ = _ols(yd, Xd)
    coef, coef_se = float(beta[idx]), float(se[idx])
    t = coef / coef_se if coef_se > 0 else np.nan
    return {"feature": feature, "spec_id": spec_id, "mode": mode,
            "coef": coef, "se": coef_se, "t": t, "n": len(df), "flags": ""}


def connectedness_ladder(estimates: pd.DataFrame, features: FeatureMatrix, catalog,
                         mode: str, feature_names=None, **kwargs) -> pd.DataFrame:
    """All (feature, spec) regressions as a table in the export schema."""
    names = list(feature_names) if feature_names is not None else features.features
    rows = [
        connectedness_regression(estimates, features, catalog, mode, spec_id, feature, **kwargs)
        for feature in names
        for spec_id in sorted(SPEC_CONTROLS)
    ]
    return pd.DataFrame(rows, columns=SPEC_RESULT_COLUMNS)


def robust_features(ladder: pd.DataFrame) -> dict[str, bool]:
    """A feature is robust when its coefficient keeps one sign across all six specs."""
    out = {}
    for feature, sub in ladder.groupby("feature"):
        coefs = sub["coef"].to_numpy(dtype=float)
        ok = np.isfinite(coefs)
        out[feature] = bool(ok.all() and (np.all(coefs > 0) or np.all(coefs < 0)))
    return out
