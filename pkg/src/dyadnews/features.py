"""Dyadic country-connectedness features: loading, shares, distances, z-scores.

The feature file is long format (``country_i,country_j,feature,value``) so
ragged availability is natural: a missing (pair, feature) row means missing
data, never zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

FEATURE_COLUMNS = ["country_i", "country_j", "feature", "value"]


class FeatureError(ValueError):
    """Raised on malformed or degenerate feature inputs."""


@dataclass(frozen=True)
class FeatureMatrix:
    """Wide per-pair feature table with explicit missing markers (NaN)."""

    table: pd.DataFrame  # index: (country_i, country_j); columns: features

    @property
    def features(self) -> list[str]:
        return list(self.table.columns)

    def countries(self) -> list[str]:
        idx = self.table.index
        return sorted(set(idx.get_level_values(0)) | set(idx.get_level_values(1)))

    def lookup(self, country_i: str, country_j: str) -> pd.Series:
        return self.table.loc[(country_i, country_j)]


def load_features(path) -> FeatureMatrix:
    raw = pd.read_csv(path, dtype={"country_i": str, "country_j": str, "feature": str})
    missing = [c for c in FEATURE_COLUMNS if c not in raw.columns]
    if missing:
        raise FeatureError(f"features file missing columns {missing}")
    dup = raw.duplicated(subset=["country_i", "country_j", "feature"])
    if dup.any():
        row = raw[dup].iloc[0]
        raise FeatureError(
            f"duplicate feature row ({row.country_i}, {row.country_j}, {row.feature})"
        )
    wide = raw.pivot(index=["country_i", "country_j"], columns="feature", values="value")
    wide.columns.name = None
    return FeatureMatrix(table=wide.sort_index())


def foreign_connection_share(sci: dict[tuple[str, str], float], i: str, j: str) -> float:
    """Share of country i's foreign social ties pointing at j:
    SCI(i,j) / sum over k != i of SCI(i,k).  Own-country entries are ignored."""
    total = sum(v for (a, k), v in sci.items() if a == i and k != i)
    if total <= 0:
        raise FeatureError(f"no positive foreign SCI entries for {i!r}")
    return sci.get((i, j), 0.0) / total


def preference_distance(x_i, x_j) -> float:
    """Euclidean distance between standardized per-country trait vectors.

    Any missing component makes the distance missing (NaN)."""
    a = np.asarray(x_i, dtype=float)
    b = np.asarray(x_j, dtype=float)
    if a.shape != b.shape:
        raise FeatureError(f"trait vectors differ in length: {a.shape} vs {b.shape}")
    if np.isnan(a).any() or np.isnan(b).any():
        return float("nan")
    return float(np.sqrt(((a - b) ** 2).sum()))


def zscore_columns(frame: pd.DataFrame) -> pd.DataFrame:
    """Per-column (x - mean) / sd over non-missing entries, population sd.

    Missing values stay missing; a zero-variance column is an error naming it.
    """
    out = frame.copy()
    for col in out.columns:
        values = out[col].to_numpy(dtype=float)
        ok = ~np.isnan(values)
        if ok.sum() < 2:
            raise FeatureError(f"column {col!r} has fewer than 2 non-missing values")
        mean = values[ok].mean()
        sd = values[ok].std()  # population convention
        if sd == 0:
            raise FeatureError(f"column {col!r} has zero variance")
        z = np.full_like(values, np.nan)
        z[ok] = (values[ok] - mean) / sd
        out[col] = z
    return out


def zscore_features(matrix: FeatureMatrix) -> FeatureMatrix:
    """Z-scored view of a feature matrix (over all pairs present in the file)."""
    return FeatureMatrix(table=zscore_columns(matrix.table))
