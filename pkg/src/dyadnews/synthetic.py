"""Synthetic worlds with planted ground truth, plus a dense OLS oracle.

Worlds are drawn from a configurable data-generating process: per-dyad baseline
log rates, common day shocks, and planted log-scale attention effects on
treated cells.  The truth file records every planted coefficient per
(event, reporting country) so estimator output can be scored directly.  The
dense oracle re-fits an event design by explicit dummy-variable OLS and
explicit cluster summation, independent of the demeaning path.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from dyadnews.estimator import Design

# Stable ISO-3166 alpha-3 labels for synthetic countries; the first few are the
# ones used by fixtures and demos.
ISO_CODES = (
    "DEU", "BGD", "ITA", "MEX", "IND", "USA", "FRA", "GBR", "ESP", "BRA",
    "JPN", "CHN", "ZAF", "NGA", "EGY", "TUR", "RUS", "CAN", "AUS", "ARG",
    "CHL", "COL", "PER", "KEN", "ETH", "GHA", "MAR", "TUN", "SAU", "ARE",
    "ISR", "GRC", "PRT", "NLD", "BEL", "CHE", "AUT", "POL", "CZE", "SWE",
    "NOR", "DNK", "FIN", "IRL", "HUN", "ROU", "BGR", "UKR", "KAZ", "PAK",
    "IDN", "MYS", "THA", "VNM", "PHL", "KOR", "NZL", "NPL", "LKA", "MMR",
)

DYADIC_FEATURES = (
    "distance_km", "contiguity", "same_country_ever", "colony",
    "religious_similarity", "linguistic_similarity", "cultural_similarity",
    "social_share", "export_share", "import_share",
)
OPTIONAL_FEATURES = (
    "genetic_similarity", "genetic_similarity_vs_usa",
    "preference_distance", "climate_belief_distance",
)
EXTRA_FEATURES = ("digital_trade",)


class SyntheticError(ValueError):
    """Raised on invalid world configurations."""


@dataclass(frozen=True)
class WorldConfig:
    n_sources: int = 40
    n_countries: int = 10
    first_day: dt.date = dt.date(2020, 1, 1)
    n_days: int = 120
    base_log_rate_mean: float = 3.0
    base_log_rate_sd: float = 0.3
    day_shock_sd: float = 0.05
    type_effects: dict = field(default_factory=lambda: {"earthquake": 0.05, "flood": 0.0})
    death_gradient: float = 0.0       # common slope on ln(1 + deaths)
    interaction_slope: float = 0.0    # slope on z(social_share) x ln(1 + deaths)
    n_events: int = 20
    deaths_log_mean: float = 3.0
    deaths_log_sd: float = 1.0
    max_duration: int = 3
    noise: str = "poisson"            # or "negbin"
    negbin_r: float = 10.0
    pad: int = 7
    tau: int = 3
    seed: int = 0

    def validate(self) -> None:
        if self.noise not in ("poisson", "negbin"):
            raise SyntheticError(f"unknown noise family {self.noise!r}")
        if self.base_log_rate_sd < 0 or self.day_shock_sd < 0 or self.deaths_log_sd < 0:
            raise SyntheticError("scales must be non-negative")
        if not all(np.isfinite(list(self.type_effects.values()))):
            raise SyntheticError("planted type effects must be finite")
        if self.n_countries > len(ISO_CODES):
            raise SyntheticError(f"at most {len(ISO_CODES)} synthetic countries supported")
        min_span = self.pad + self.max_duration + max(self.pad, self.tau) + 2
        if self.n_days < min_span:
            raise SyntheticError(f"span of {self.n_days} days too short for any event window")


# Presets used by the CLI, acceptance suite, and demos.
PRESETS: dict[str, WorldConfig] = {
    # Desk-scale world for fixtures, demos, and determinism checks.
    "demo": WorldConfig(
        n_sources=50, n_countries=25, n_days=150, n_events=40,
        base_log_rate_mean=4.0, base_log_rate_sd=0.3, day_shock_sd=0.05,
        type_effects={"earthquake": 0.30, "technological": 0.20, "wildfire": 0.12,
                      "storm": 0.06, "flood": 0.0},
        death_gradient=0.02, interaction_slope=0.04, seed=7,
    ),
    # Planted-truth world at the scale of the recovery and ordering checks:
    # 200 sources, 40 countries, 3 years, 300 events, effects 0..0.08.
    "reference": WorldConfig(
        n_sources=200, n_countries=40, n_days=1095, n_events=300,
        base_log_rate_mean=7.4, base_log_rate_sd=0.25, day_shock_sd=0.05,
        type_effects={"earthquake": 0.08, "technological": 0.05, "wildfire": 0.03,
                      "storm": 0.015, "flood": 0.0},
        death_gradient=0.004, interaction_slope=0.0, seed=42,
    ),
    # No planted effects anywhere; used for shrinkage calibration.
    "null": WorldConfig(
        n_sources=240, n_countries=30, n_days=400, n_events=72,
        base_log_rate_mean=6.0, base_log_rate_sd=0.25, day_shock_sd=0.05,
        type_effects={"earthquake": 0.0, "technological": 0.0, "wildfire": 0.0,
                      "storm": 0.0, "flood": 0.0},
        death_gradient=0.0, interaction_slope=0.0, seed=11,
    ),
}


@dataclass(frozen=True)
class World:
    config: WorldConfig
    sources: tuple[str, ...]
    countries: tuple[str, ...]
    source_country: tuple[str, ...]
    counts: pd.DataFrame
    events: pd.DataFrame
    features: pd.DataFrame
    truth: pd.DataFrame


def _event_table(config: WorldConfig, rng: np.random.Generator) -> pd.DataFrame:
    """Draw the synthetic disaster catalog."""
    types = sorted(config.type_effects)
    lo = config.pad
    hi = config.n_days - config.pad - config.max_duration - config.tau - 1
    if hi < lo:
        raise SyntheticError("span too short for any event window")
    rows = []
    for k in range(config.n_events):
        dtype = types[k % len(types)]
        country = ISO_CODES[int(rng.integers(config.n_countries))]
        start = int(rng.integers(lo, hi + 1))
        duration = int(rng.integers(1, config.max_duration + 1))
        deaths = int(np.round(np.exp(rng.normal(config.deaths_log_mean, config.deaths_log_sd))))
        rows.append((f"ev{k:04d}", country, dtype, start, start + duration - 1, deaths))
    frame = pd.DataFrame(rows, columns=["event_id", "country", "dtype", "start", "end", "deaths"])
    return frame


def _feature_tables(config: WorldConfig, rng: np.random.Generator):
    """Dyadic connectedness features plus the z-scored social share used in truth."""
    countries = list(ISO_CODES[: config.n_countries])
    n = len(countries)

    sym = {}
    sym["distance_km"] = rng.uniform(200.0, 15000.0, size=(n, n))
    sym["contiguity"] = (rng.random((n, n)) < 0.1).astype(float)
    sym["same_country_ever"] = (rng.random((n, n)) < 0.05).astype(float)
    sym["colony"] = (rng.random((n, n)) < 0.07).astype(float)
    sym["religious_similarity"] = rng.random((n, n))
    sym["linguistic_similarity"] = rng.random((n, n))
    sym["cultural_similarity"] = rng.normal(0.0, 1.0, size=(n, n))
    sym["genetic_similarity"] = rng.random((n, n))
    sym["genetic_similarity_vs_usa"] = rng.random((n, n))
    sym["preference_distance"] = rng.uniform(0.0, 3.0, size=(n, n))
    sym["climate_belief_distance"] = rng.uniform(0.0, 3.0, size=(n, n))
    for name, mat in sym.items():
        mat = np.triu(mat, 1)
        sym[name] = mat + mat.T

    sci = rng.lognormal(0.0, 1.0, size=(n, n))
    sci = np.triu(sci, 1)
    sci = sci + sci.T
    np.fill_diagonal(sci, 0.0)
    social = sci / sci.sum(axis=1, keepdims=True)

    exports = rng.lognormal(0.0, 1.0, size=(n, n))
    np.fill_diagonal(exports, 0.0)
    export_share = exports / exports.sum(axis=1, keepdims=True)
    imports = rng.lognormal(0.0, 1.0, size=(n, n))
    np.fill_diagonal(imports, 0.0)
    import_share = imports / imports.sum(axis=0, keepdims=True)
    digital = rng.lognormal(0.0, 0.5, size=(n, n))

    # optional features are withheld for a random subset of pairs
    optional_mask = rng.random((n, n)) < 0.75
    optional_mask = np.triu(optional_mask, 1)
    optional_mask = optional_mask | optional_mask.T

    rows = []
    for a in range(n):
        for b in range(n):
            if a == b:
                continue
            for name in ("distance_km", "contiguity", "same_country_ever", "colony",
                         "religious_similarity", "linguistic_similarity", "cultural_similarity"):
                rows.append((countries[a], countries[b], name, sym[name][a, b]))
            for name in OPTIONAL_FEATURES:
                if optional_mask[a, b]:
                    rows.append((countries[a], countries[b], name, sym[name][a, b]))
            rows.append((countries[a], countries[b], "social_share", social[a, b]))
            rows.append((countries[a], countries[b], "export_share", export_share[a, b]))
            rows.append((countries[a], countries[b], "import_share", import_share[a, b]))
            rows.append((countries[a], countries[b], "digital_trade", digital[a, b]))
    features = pd.DataFrame(rows, columns=["country_i", "country_j", "feature", "value"])

    off = ~np.eye(n, dtype=bool)
    mean = social[off].mean()
    sd = social[off].std()
    z_social = np.zeros_like(social)
    z_social[off] = (social[off] - mean) / sd
    return features, z_social


def planted_beta(config: WorldConfig, dtype: str, deaths: int, z_social_ij: float) -> float:
    """The planted log1p-scale attention increase for one (event, reporting country)."""
    return (
        config.type_effects.get(dtype, 0.0)
        + config.death_gradient * np.log1p(deaths)
        + config.interaction_slope * z_social_ij * np.log1p(deaths)
    )


def generate_world(config: WorldConfig) -> World:
    """Draw a full synthetic world: counts, events, features, and planted truth.

    Deterministic under the seed: structural draws use tagged substreams and
    daily counts use per-day counter-based substreams, so output is identical
    regardless of evaluation order.
    """
    config.validate()
    countries = list(ISO_CODES[: config.n_countries])
    sources = [f"src{i:03d}" for i in range(config.n_sources)]
    source_country_idx = np.arange(config.n_sources) % config.n_countries
    source_country = [countries[i] for i in source_country_idx]

    rng_structure = np.random.default_rng([config.seed, 1])
    base_log = rng_structure.normal(
        config.base_log_rate_mean, config.base_log_rate_sd,
        size=(config.n_sources, config.n_countries),
    )
    events = _event_table(config, np.random.default_rng([config.seed, 2]))
    features, z_social = _feature_tables(config, np.random.default_rng([config.seed, 3]))

    cidx = {c: k for k, c in enumerate(countries)}

    # planted truth per (event, reporting country)
    truth_rows = []
    for ev in events.itertuples(index=False):
        j = cidx[ev.country]
        for i, country_i in enumerate(countries):
            if i == j:
                continue
            beta = planted_beta(config, ev.dtype, ev.deaths, z_social[i, j])
            truth_rows.append((ev.event_id, country_i, beta))
    truth = pd.DataFrame(truth_rows, columns=["event_id", "report_country", "beta_true"])

    # per-day planted log-rate additions on treated cells
    treat_add = np.zeros((config.n_days, config.n_sources, config.n_countries))
    for ev in events.itertuples(index=False):
        j = cidx[ev.country]
        t0, t1 = ev.start, min(ev.start + config.tau, config.n_days - 1)
        for s in range(config.n_sources):
            i = source_country_idx[s]
            if i == j:
                continue
            treat_add[t0:t1 + 1, s, j] += planted_beta(config, ev.dtype, ev.deaths, z_social[i, j])

    own = source_country_idx[:, None] == np.arange(config.n_countries)[None, :]
    day_strings = [(config.first_day + dt.timedelta(days=d)).isoformat() for d in range(config.n_days)]

    totals = np.empty((config.n_days, config.n_sources, config.n_countries), dtype=np.int64)
    disasters = np.empty_like(totals)
    for d in range(config.n_days):
        day_rng = np.random.default_rng([config.seed, 1000, d])
        shock = day_rng.normal(0.0, config.day_shock_sd) if config.day_shock_sd > 0 else 0.0
        lam = np.exp(base_log + shock + treat_add[d])
        if config.noise == "poisson":
            counts = day_rng.poisson(lam)
        else:
            # negative binomial with mean lam and dispersion r
            r = config.negbin_r
            counts = day_rng.negative_binomial(r, r / (r + lam))
        counts[own] = 0
        totals[d] = counts
        disasters[d] = day_rng.binomial(totals[d], 0.08)

    keep = ~np.broadcast_to(own, totals.shape) & (totals > 0)
    d_idx, s_idx, c_idx = np.nonzero(keep)
    counts_frame = pd.DataFrame(
        {
            "day": np.array(day_strings, dtype=object)[d_idx],
            "source_id": np.array(sources, dtype=object)[s_idx],
            "source_country": np.array(source_country, dtype=object)[s_idx],
            "dest_country": np.array(countries, dtype=object)[c_idx],
            "count_total": totals[d_idx, s_idx, c_idx],
            "count_disaster": disasters[d_idx, s_idx, c_idx],
        }
    )

    events_out = pd.DataFrame(
        {
            "event_id": events["event_id"],
            "country": events["country"],
            "dtype": events["dtype"],
            "start_day": [day_strings[s] for s in events["start"]],
            "end_day": [day_strings[e] for e in events["end"]],
            "deaths": events["deaths"],
        }
    )
    return World(
        config=config,
        sources=tuple(sources),
        countries=tuple(countries),
        source_country=tuple(source_country),
        counts=counts_frame,
        events=events_out,
        features=features,
        truth=truth,
    )


def write_world(world: World, outdir) -> dict[str, str]:
    """Write the world's files; returns a name -> path map."""
    import os

    os.makedirs(outdir, exist_ok=True)
    paths = {
        "counts": os.path.join(outdir, "counts.csv"),
        "registry": os.path.join(outdir, "registry.csv"),
        "events": os.path.join(outdir, "events.csv"),
        "features": os.path.join(outdir, "features.csv"),
        "truth": os.path.join(outdir, "truth.csv"),
    }
    world.counts.to_csv(paths["counts"], index=False, lineterminator="\n")
    pd.DataFrame({"source_id": world.sources, "source_country": world.source_country}).to_csv(
        paths["registry"], index=False, lineterminator="\n"
    )
    world.events.to_csv(paths["events"], index=False, lineterminator="\n")
    world.features.to_csv(paths["features"], index=False, lineterminator="\n", float_format="%.12g")
    world.truth.to_csv(paths["truth"], index=False, lineterminator="\n", float_format="%.12g")
    return paths


@dataclass(frozen=True)
class OracleResult:
    labels: list
    beta: np.ndarray
    se_classical: np.ndarray
    se_clustered: np.ndarray
    defined: np.ndarray


def dense_ols_oracle(design: Design, by_report_country: bool = True) -> OracleResult:
    """Full dummy-variable OLS for an event design, via pseudo-inverse normal
    equations, with classical and explicitly-summed two-way clustered SEs.

    Independent verification path for the demeaning estimator; limited to
    20,000 rows (dense dummy expansion).
    """
    if design.n > 20000:
        raise SyntheticError("dense oracle limited to 20,000 rows")

    if by_report_country:
        treated_reports = np.unique(design.report_idx[design.treat > 0])
        labels = [design.countries[i] for i in treated_reports]
        T = np.column_stack([design.treat * (design.report_idx == i) for i in treated_reports]) \
            if len(treated_reports) else np.empty((design.n, 0))
    else:
        labels = [""]
        T = design.treat[:, None].astype(float)

    k = T.shape[1]
    dyads = np.unique(design.dyad_id, return_inverse=True)[1]
    days = np.unique(design.day_id, return_inverse=True)[1]
    D_dyad = np.eye(dyads.max() + 1)[dyads]
    D_day = np.eye(days.max() + 1)[days]
    D = np.hstack([D_dyad, D_day])
    X = np.hstack([T, D])

    # identification: a treat column must not lie in the dummy span
    defined = np.zeros(k, dtype=bool)
    if k:
        coef, _, _, _ = np.linalg.lstsq(D, T, rcond=None)
        resid_T = T - D @ coef
        defined = np.einsum("ij,ij->j", resid_T, resid_T) > 1e-10 * design.n

    XtX = X.T @ X
    A = np.linalg.pinv(XtX)
    beta_full = A @ (X.T @ design.y)
    resid = design.y - X @ beta_full

    rank = np.linalg.matrix_rank(XtX)
    dof = max(design.n - rank, 1)
    sigma2 = float(resid @ resid) / dof
    se_classical = np.sqrt(np.clip(sigma2 * np.diag(A)[:k], 0.0, None))

    B = A @ X.T  # rows: coefficient influence weights
    pair_ids = design.source_idx.astype(np.int64) * (design.dest_idx.max() + 1) + design.dest_idx

    def meat_block(ids):
        codes = np.unique(ids, return_inverse=True)[1]
        scores = np.zeros((codes.max() + 1, k))
        np.add.at(scores, codes, (B[:k].T * resid[:, None]))
        return scores.T @ scores

    V = meat_block(design.source_idx) + meat_block(design.dest_idx) - meat_block(pair_ids)
    V = (V + V.T) / 2.0
    if k:
        eigvals, eigvecs = np.linalg.eigh(V)
        if eigvals.min() < 0:
            V = eigvecs @ np.diag(np.clip(eigvals, 0.0, None)) @ eigvecs.T
    se_clustered = np.sqrt(np.clip(np.diag(V), 0.0, None))

    beta = beta_full[:k].copy()
    beta[~defined] = np.nan
    se_classical = se_classical.copy()
    se_classical[~defined] = np.nan
    se_clustered[~defined] = np.nan
    return OracleResult(labels=labels, beta=beta, se_classical=se_classical,
                        se_clustered=se_clustered, defined=defined)
