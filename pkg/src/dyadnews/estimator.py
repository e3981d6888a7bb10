"""Per-event two-way fixed-effects event-study estimator.

For each disaster the outcome panel inside the event window is regressed on a
treatment indicator (destination = affected country, day inside the treatment
window) after absorbing dyad and day fixed effects by iterated within-group
demeaning.  Reporting-country effects and source effects are linearly absorbed
by the dyad effects in a per-event sample and are therefore not encoded
separately.  Standard errors are clustered two-way by source and destination
via inclusion-exclusion; estimates with a t-statistic below a threshold are
hard-thresholded to zero ("shrinkage").
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from dyadnews.catalog import DisasterEvent, EventWindow
from dyadnews.panel import PanelStore, transform_count

DEMEAN_TOL = 1e-10
DEMEAN_MAX_SWEEPS = 200
SHRINK_THRESHOLD = 1.65

ESTIMATE_COLUMNS = ["event_id", "report_country", "beta", "se", "tstat", "beta_shrunk", "n_obs", "flags"]


class EstimationError(ValueError):
    """Raised when a design violates the estimator's preconditions."""


@dataclass(frozen=True)
class Design:
    """One event's regression sample: complete (source, dest, day) grid inside the
    window with own-country dyads removed and implicit zeros materialized."""

    event_id: str
    event_country: str
    y: np.ndarray
    dyad_id: np.ndarray          # consecutive codes for (source, dest)
    day_id: np.ndarray           # consecutive codes for days in window
    source_idx: np.ndarray
    dest_idx: np.ndarray
    report_idx: np.ndarray       # home-country index of the row's source
    treat: np.ndarray            # 0/1
    kappa: np.ndarray            # day offset from event start
    countries: tuple[str, ...]
    n_baseline_days: int = field(default=0)

    @property
    def n(self) -> int:
        return len(self.y)


def build_design(store: PanelStore, window: EventWindow, event: DisasterEvent,
                 transform_mode: str = "log1p", outcome_channel: str = "total") -> Design:
    """Materialize the event-window design table from the sparse panel."""
    if store.is_empty:
        raise EstimationError("panel store is empty")
    if event.country not in store.countries:
        raise EstimationError(f"event country {event.country!r} absent from panel countries")
    span = store.span
    if window.window_start < span.first_day or window.window_end > span.last_day:
        raise EstimationError("event window outside panel span")

    lo = store.day_to_ordinal(window.window_start)
    hi = store.day_to_ordinal(window.window_end)
    t_lo = store.day_to_ordinal(window.treat_start)
    t_hi = store.day_to_ordinal(window.treat_end)
    start_ord = store.day_to_ordinal(event.start_day)

    n_window_days = hi - lo + 1
    n_treat_days = max(0, min(t_hi, hi) - max(t_lo, lo) + 1)
    n_baseline_days = n_window_days - n_treat_days
    if n_baseline_days <= 0:
        raise EstimationError(f"event {event.event_id}: no baseline days in window")

    days = np.arange(lo, hi + 1, dtype=np.int64)
    srcs = np.arange(len(store.sources), dtype=np.int64)
    dsts = np.arange(len(store.countries), dtype=np.int64)
    day_g, src_g, dst_g = (a.ravel() for a in np.meshgrid(days, srcs, dsts, indexing="ij"))

    # exclude own-country pairs: source home country == destination
    own = store.source_country_idx[src_g] == dst_g
    day_g, src_g, dst_g = day_g[~own], src_g[~own], dst_g[~own]

    counts = store.lookup_counts(day_g, src_g, dst_g, channel=outcome_channel)
    y = transform_count(counts, transform_mode)

    j_idx = store.countries.index(event.country)
    treat = ((dst_g == j_idx) & (day_g >= t_lo) & (day_g <= t_hi)).astype(np.float64)

    dyad_raw = src_g * len(store.countries) + dst_g
    dyad_id = np.unique(dyad_raw, return_inverse=True)[1]
    return Design(
        event_id=event.event_id,
        event_country=event.country,
        y=y,
        dyad_id=dyad_id,
        day_id=day_g - lo,
        source_idx=src_g,
        dest_idx=dst_g,
        report_idx=store.source_country_idx[src_g],
        treat=treat,
        kappa=day_g - start_ord,
        countries=store.countries,
        n_baseline_days=n_baseline_days,
    )


def demean_within(columns: np.ndarray, groups: list[np.ndarray],
                  tol: float = DEMEAN_TOL, max_sweeps: int = DEMEAN_MAX_SWEEPS) -> np.ndarray:
    """Iterated within-transformation: subtract group means alternately until the
    largest within-group mean magnitude falls below ``tol``."""
    X = np.array(columns, dtype=np.float64, copy=True)
    if X.ndim == 1:
        X = X[:, None]
    sizes = [np.bincount(g).astype(np.float64) for g in groups]
    for _ in range(max_sweeps):
        worst = 0.0
        for g, size in zip(groups, sizes):
            for k in range(X.shape[1]):
                means = np.bincount(g, weights=X[:, k]) / size
                X[:, k] -= means[g]
        for g, size in zip(groups, sizes):
            for k in range(X.shape[1]):
                means = np.bincount(g, weights=X[:, k]) / size
                worst = max(worst, float(np.abs(means).max(initial=0.0)))
        if worst < tol:
            break
    return X


def cluster_se_two_way(X: np.ndarray, resid: np.ndarray,
                       source_ids: np.ndarray, dest_ids: np.ndarray) -> np.ndarray:
    """Cameron-Gelbach-Miller two-way clustered covariance of the OLS slopes.

    ``X`` holds the (demeaned) regressors; the sandwich is
    V = V_source + V_dest - V_{source x dest}, with negative eigenvalues of the
    combined covariance floored at zero.
    """
    if len(np.unique(source_ids)) < 2 or len(np.unique(dest_ids)) < 2:
        raise EstimationError("two-way clustered SEs need at least two clusters per dimension")
    XtX = X.T @ X
    bread = np.linalg.pinv(XtX)
    pair_ids = source_ids.astype(np.int64) * (dest_ids.max() + 1) + dest_ids

    def meat(ids):
        codes = np.unique(ids, return_inverse=True)[1]
        scores = np.zeros((codes.max() + 1, X.shape[1]))
        np.add.at(scores, codes, X * resid[:, None])
        return scores.T @ scores

    M = meat(source_ids) + meat(dest_ids) - meat(pair_ids)
    V = bread @ M @ bread
    V = (V + V.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(V)
    if eigvals.min() < 0:
        eigvals = np.clip(eigvals, 0.0, None)
        V = eigvecs @ np.diag(eigvals) @ eigvecs.T
    return V


def _check_preconditions(design: Design) -> None:
    if len(np.unique(design.day_id)) < 2:
        raise EstimationError("design needs at least two distinct days")
    if len(np.unique(design.dyad_id)) < 2:
        raise EstimationError("design needs at least two dyads")
    if design.n_baseline_days <= 0:
        raise EstimationError("design has no baseline days")


def _fit(design: Design, T: np.ndarray, labels: list) -> tuple[pd.DataFrame, np.ndarray]:
    """Shared fitting path: demean [T | y], OLS, two-way clustered SEs.

    Returns one row per column of ``T`` (undefined columns flagged) plus the
    residual vector of the fitted model.
    """
    groups = [design.dyad_id, design.day_id]
    Z = demean_within(np.column_stack([T, design.y]), groups)
    Td, yd = Z[:, :-1], Z[:, -1]

    n = design.n
    col_ss = np.einsum("ij,ij->j", Td, Td)
    defined = col_ss > 1e-12 * n
    rows = []
    resid = yd.copy()
    betas = np.full(T.shape[1], np.nan)
    ses = np.full(T.shape[1], np.nan)

    if defined.any():
        Tg = Td[:, defined]
        XtX = Tg.T @ Tg
        try:
            beta_g = np.linalg.solve(XtX, Tg.T @ yd)
        except np.linalg.LinAlgError:
            beta_g = np.linalg.pinv(XtX) @ (Tg.T @ yd)
        resid = yd - Tg @ beta_g
        V = cluster_se_two_way(Tg, resid, design.source_idx, design.dest_idx)
        se_g = np.sqrt(np.clip(np.diag(V), 0.0, None))
        betas[defined] = beta_g
        ses[defined] = se_g

    for k, label in enumerate(labels):
        if not defined[k]:
            rows.append((label, np.nan, np.nan, np.nan, n, "undefined"))
        elif not np.isfinite(ses[k]) or ses[k] <= 0:
            # identified coefficient whose clustered variance collapsed to zero
            rows.append((label, betas[k], ses[k], np.nan, n, "degenerate_se"))
        else:
            rows.append((label, betas[k], ses[k], betas[k] / ses[k], n, ""))
    frame = pd.DataFrame(rows, columns=["label", "beta", "se", "tstat", "n_obs", "flags"])
    return frame, resid


def estimate_event(design: Design, by_report_country: bool = True) -> pd.DataFrame:
    """Estimate the attention increase for one event.

    With ``by_report_country`` the treatment indicator is interacted with
    reporting-country indicators, yielding one coefficient per reporting
    country with identifying variation; otherwise a single pooled coefficient.
    """
    _check_preconditions(design)
    if design.treat.sum() == 0:
        return pd.DataFrame(
            [(design.event_id, "", np.nan, np.nan, np.nan, np.nan, design.n, "undefined;no_treated_cells")],
            columns=ESTIMATE_COLUMNS,
        )

    if by_report_country:
        treated_reports = np.unique(design.report_idx[design.treat > 0])
        labels = [design.countries[i] for i in treated_reports]
        T = np.zeros((design.n, len(treated_reports)))
        for k, i in enumerate(treated_reports):
            T[:, k] = design.treat * (design.report_idx == i)
    else:
        labels = [""]
        T = design.treat[:, None]

    frame, _ = _fit(design, T, labels)
    frame.insert(0, "event_id", design.event_id)
    frame = frame.rename(columns={"label": "report_country"})
    frame["beta_shrunk"] = np.nan
    return frame[ESTIMATE_COLUMNS]


def estimate_event_flexible(design: Design, kappa_range: tuple[int, int] = (-7, 7)) -> pd.DataFrame:
    """Pooled event-time profile: one coefficient per day offset from the start date."""
    _check_preconditions(design)
    j_idx = design.countries.index(design.event_country)
    on_event = design.dest_idx == j_idx
    present = np.unique(design.kappa)
    kappas = [k for k in range(kappa_range[0], kappa_range[1] + 1) if k in present]
    dropped = [k for k in range(kappa_range[0], kappa_range[1] + 1) if k not in present]
    if dropped:
        warnings.warn(f"event {design.event_id}: kappa days {dropped} outside window, dropped")
    if not kappas:
        raise EstimationError("no kappa days inside the window")

    T = np.zeros((design.n, len(kappas)))
    for c, k in enumerate(kappas):
        T[:, c] = (on_event & (design.kappa == k)).astype(float)

    frame, _ = _fit(design, T, kappas)
    frame.insert(0, "event_id", design.event_id)
    frame = frame.rename(columns={"label": "kappa", "beta": "beta_kappa", "se": "se_kappa"})
    return frame[["event_id", "kappa", "beta_kappa", "se_kappa", "tstat", "n_obs", "flags"]]


def shrink_estimates(estimates: pd.DataFrame, threshold: float = SHRINK_THRESHOLD,
                     two_sided: bool = False) -> pd.DataFrame:
    """Hard-threshold estimates: beta_shrunk = beta when the t-statistic clears the
    threshold, else 0.  Undefined estimates shrink to 0 and keep their flag."""
    out = estimates.copy()
    t = out["tstat"].to_numpy(dtype=float)
    stat = np.abs(t) if two_sided else t
    defined = ~out["flags"].str.contains("undefined", na=False) & np.isfinite(t)
    passes = defined & (stat >= threshold)
    out["beta_shrunk"] = np.where(passes, out["beta"], 0.0)
    return out


@dataclass(frozen=True)
class TypePools:
    overall: pd.DataFrame        # dtype, mean_beta, n_estimates
    by_country: pd.DataFrame     # dtype, report_country, mean_beta, n_estimates
    slopes: dict[str, float]     # dtype -> no-intercept slope vs earthquake means


def pool_by_type(estimates: pd.DataFrame, catalog, use_shrunk: bool = False) -> TypePools:
    """Per-disaster-type averages of the event estimates, overall and per reporting
    country, plus per-type relative-to-earthquake slopes (no-intercept fit)."""
    cat = catalog.to_frame()[["event_id", "dtype"]]
    value = "beta_shrunk" if use_shrunk else "beta"
    df = estimates.merge(cat, on="event_id", how="left")
    df = df[~df["flags"].str.contains("undefined", na=False)].copy()
    df["value"] = df[value].astype(float)

    present = df["dtype"].dropna().unique()
    requested = catalog.to_frame()["dtype"].unique()
    for dtype in requested:
        if dtype not in present:
            warnings.warn(f"disaster type {dtype!r} has no defined estimates; omitted")

    overall = (
        df.groupby("dtype")["value"].agg(["mean", "size"]).reset_index()
        .rename(columns={"mean": "mean_beta", "size": "n_estimates"})
        .sort_values("dtype").reset_index(drop=True)
    )
    by_country = (
        df.groupby(["dtype", "report_country"])["value"].agg(["mean", "size"]).reset_index()
        .rename(columns={"mean": "mean_beta", "size": "n_estimates"})
        .sort_values(["dtype", "report_country"]).reset_index(drop=True)
    )

    slopes: dict[str, float] = {}
    quake = by_country[by_country["dtype"] == "earthquake"].set_index("report_country")["mean_beta"]
    if len(quake):
        for dtype in by_country["dtype"].unique():
            if dtype == "earthquake":
                continue
            sub = by_country[by_country["dtype"] == dtype].set_index("report_country")["mean_beta"]
            shared = quake.index.intersection(sub.index)
            x = quake.loc[shared].to_numpy()
            yv = sub.loc[shared].to_numpy()
            denom = float(x @ x)
            if denom > 0:
                slopes[dtype] = float(x @ yv / denom)
    return TypePools(overall=overall, by_country=by_country, slopes=slopes)


def run_estimation(store: PanelStore, catalog, pad: int = 7, tau: int = 3,
                   transform_mode: str = "log1p", outcome_channel: str = "total",
                   by_report_country: bool = True, shrink_threshold: float = SHRINK_THRESHOLD,
                   two_sided: bool = False) -> pd.DataFrame:
    """Estimate every event in the catalog against the panel and shrink.

    Events are independent; results are concatenated sorted by event_id so the
    output does not depend on evaluation order.  Events whose window misses the
    panel span entirely are skipped with a warning.
    """
    from dyadnews.catalog import build_event_window, CatalogError

    if store.is_empty:
        raise EstimationError("cannot estimate on an empty panel store")
    frames = []
    for event in catalog:
        try:
            window = build_event_window(event, pad=pad, tau=tau, span=store.span)
        except CatalogError as exc:
            warnings.warn(str(exc))
            continue
        design = build_design(store, window, event, transform_mode, outcome_channel)
        frames.append(estimate_event(design, by_report_country=by_report_country))
    if not frames:
        return pd.DataFrame(columns=ESTIMATE_COLUMNS)
    out = pd.concat(frames, ignore_index=True)
    out = out.sort_values(["event_id", "report_country"], kind="stable").reset_index(drop=True)
    return shrink_estimates(out, threshold=shrink_threshold, two_sided=two_sided)


def export_estimates(estimates: pd.DataFrame, path) -> None:
    """Write the estimates table in the delimited export schema."""
    out = estimates[ESTIMATE_COLUMNS].copy()
    out.to_csv(path, index=False, lineterminator="\n", float_format="%.12g")
