"""Immutable columnar store for the dyadic daily article-count panel.

Counts arrive pre-attributed as a sparse delimited file with one row per
(day, source, destination-country) cell that has at least one article.  Absent
cells are semantic zeros.  Two outcome channels (all articles, disaster-keyword
articles) are carried side by side.
"""

from __future__ import annotations

import datetime as dt
import io
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

COUNTS_COLUMNS = ["day", "source_id", "source_country", "dest_country", "count_total", "count_disaster"]
REGISTRY_COLUMNS = ["source_id", "source_country"]

TRANSFORMS = ("level", "log1p", "ihs")


class PanelError(ValueError):
    """Raised on malformed or inconsistent panel inputs."""


def transform_count(count, mode: str):
    """Apply the outcome transform: level, log(1+y), or inverse hyperbolic sine.

    Accepts scalars or arrays of non-negative counts.
    """
    y = np.asarray(count, dtype=float)
    if mode == "level":
        out = y
    elif mode == "log1p":
        out = np.log1p(y)
    elif mode == "ihs":
        out = np.arcsinh(y)
    else:
        raise PanelError(f"unknown transform mode {mode!r}; expected one of {TRANSFORMS}")
    if np.ndim(count) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class PanelSpan:
    first_day: dt.date
    last_day: dt.date
    n_sources: int
    n_countries: int

    @property
    def n_days(self) -> int:
        return (self.last_day - self.first_day).days + 1

    @property
    def dense_cells(self) -> int:
        return self.n_sources * self.n_countries * self.n_days


@dataclass(frozen=True)
class PanelStore:
    """Sparse columnar panel, immutable after ingestion.

    Cells are stored sorted by (day, source, dest); integer codes index into
    the ``sources`` / ``countries`` registries.  ``source_country_idx`` maps
    each source to the index of its home country.
    """

    sources: tuple[str, ...]
    countries: tuple[str, ...]
    source_country_idx: np.ndarray
    day: np.ndarray          # day ordinal offsets from span.first_day
    source_idx: np.ndarray
    dest_idx: np.ndarray
    count_total: np.ndarray
    count_disaster: np.ndarray
    span: PanelSpan | None
    _flat_key: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.day)

    @property
    def is_empty(self) -> bool:
        return self.span is None

    def day_to_ordinal(self, day: dt.date) -> int:
        return (day - self.span.first_day).days

    def ordinal_to_day(self, ordinal: int) -> dt.date:
        return self.span.first_day + dt.timedelta(days=int(ordinal))

    def flat_key(self, day_ord, source_idx, dest_idx):
        """Flat (day, source, dest) key used for sorted sparse lookups."""
        n_s = len(self.sources)
        n_c = len(self.countries)
        return (np.asarray(day_ord, dtype=np.int64) * n_s + source_idx) * n_c + dest_idx

    def lookup_counts(self, day_ord, source_idx, dest_idx, channel: str = "total") -> np.ndarray:
        """Counts for arbitrary (day, source, dest) triples; absent cells are zero."""
        keys = self.flat_key(day_ord, source_idx, dest_idx)
        stored = self._flat_key
        pos = np.searchsorted(stored, keys)
        pos = np.clip(pos, 0, len(stored) - 1)
        hit = stored[pos] == keys if len(stored) else np.zeros(len(keys), dtype=bool)
        values = self.count_total if channel == "total" else self.count_disaster
        out = np.zeros(len(keys), dtype=np.int64)
        if len(stored):
            out[hit] = values[pos[hit]]
        return out

    def to_frame(self) -> pd.DataFrame:
        days = [self.ordinal_to_day(o).isoformat() for o in self.day]
        return pd.DataFrame(
            {
                "day": days,
                "source_id": [self.sources[i] for i in self.source_idx],
                "source_country": [self.countries[self.source_country_idx[i]] for i in self.source_idx],
                "dest_country": [self.countries[i] for i in self.dest_idx],
                "count_total": self.count_total,
                "count_disaster": self.count_disaster,
            }
        )

    def serialize(self) -> bytes:
        """Canonical byte serialization (sorted CSV); identical inputs give identical bytes."""
        buf = io.StringIO()
        self.to_frame().to_csv(buf, index=False, lineterminator="\n")
        return buf.getvalue().encode("utf-8")

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.serialize())


def _parse_days(series: pd.Series, what: str) -> np.ndarray:
    try:
        return pd.to_datetime(series, format="%Y-%m-%d").dt.date.to_numpy()
    except (ValueError, TypeError) as exc:
        raise PanelError(f"malformed {what} date: {exc}") from exc


def load_registry(path) -> pd.DataFrame:
    reg = pd.read_csv(path, dtype=str)
    missing = [c for c in REGISTRY_COLUMNS if c not in reg.columns]
    if missing:
        raise PanelError(f"registry file missing columns {missing}")
    if reg["source_id"].duplicated().any():
        dup = reg.loc[reg["source_id"].duplicated(), "source_id"].iloc[0]
        raise PanelError(f"duplicate source_id {dup!r} in registry")
    return reg[REGISTRY_COLUMNS]


def ingest_counts(counts_path, registry_path) -> PanelStore:
    """Build an immutable :class:`PanelStore` from a counts file and a source registry.

    Rejects duplicate (source, dest, day) keys, unknown sources, and rows with
    ``count_disaster > count_total``.  Errors carry 1-based data line numbers.
    """
    registry = load_registry(registry_path)
    raw = pd.read_csv(counts_path, dtype={"source_id": str, "source_country": str, "dest_country": str})
    missing = [c for c in COUNTS_COLUMNS if c not in raw.columns]
    if missing:
        raise PanelError(f"counts file missing columns {missing}")

    source_home = dict(zip(registry["source_id"], registry["source_country"]))
    if raw.empty:
        sources = tuple(sorted(source_home))
        countries = tuple(sorted(set(source_home.values())))
        cidx = {c: k for k, c in enumerate(countries)}
        empty = np.empty(0, dtype=np.int64)
        return PanelStore(
            sources=sources,
            countries=countries,
            source_country_idx=np.array([cidx[source_home[s]] for s in sources], dtype=np.int64),
            day=empty, source_idx=empty, dest_idx=empty,
            count_total=empty, count_disaster=empty,
            span=None, _flat_key=empty,
        )

    lines = raw.index.to_numpy() + 2  # header is line 1

    for col in ("count_total", "count_disaster"):
        vals = pd.to_numeric(raw[col], errors="coerce")
        bad = vals.isna() | (vals < 0) | (vals != vals.round())
        if bad.any():
            raise PanelError(f"malformed {col} at line {lines[bad.to_numpy()][0]}")
        raw[col] = vals.astype(np.int64)

    over = (raw["count_disaster"] > raw["count_total"]).to_numpy()
    if over.any():
        raise PanelError(f"count_disaster exceeds count_total at line {lines[over][0]}")

    unknown = ~raw["source_id"].isin(source_home).to_numpy()
    if unknown.any():
        sid = raw.loc[unknown, "source_id"].iloc[0]
        raise PanelError(f"unknown source_id {sid!r} at line {lines[unknown][0]}")

    declared = raw["source_country"].to_numpy()
    registered = raw["source_id"].map(source_home).to_numpy()
    mismatch = declared != registered
    if mismatch.any():
        raise PanelError(
            f"source_country disagrees with registry at line {lines[mismatch][0]}"
        )

    days = _parse_days(raw["day"], "day")
    first_day, last_day = days.min(), days.max()

    sources = tuple(sorted(source_home))
    countries = tuple(sorted(set(source_home.values()) | set(raw["dest_country"])))
    sidx = {s: k for k, s in enumerate(sources)}
    cidx = {c: k for k, c in enumerate(countries)}

    day_ord = np.array([(d - first_day).days for d in days], dtype=np.int64)
    source_idx = raw["source_id"].map(sidx).to_numpy(dtype=np.int64)
    dest_idx = raw["dest_country"].map(cidx).to_numpy(dtype=np.int64)

    n_s, n_c = len(sources), len(countries)
    flat = (day_ord * n_s + source_idx) * n_c + dest_idx
    order = np.argsort(flat, kind="stable")
    flat = flat[order]
    dup = np.flatnonzero(np.diff(flat) == 0)
    if len(dup):
        raise PanelError(
            f"duplicate (day, source, dest) key at line {lines[order[dup[0] + 1]]}"
        )

    span = PanelSpan(first_day=first_day, last_day=last_day, n_sources=n_s, n_countries=n_c)
    return PanelStore(
        sources=sources,
        countries=countries,
        source_country_idx=np.array([cidx[source_home[s]] for s in sources], dtype=np.int64),
        day=day_ord[order],
        source_idx=source_idx[order],
        dest_idx=dest_idx[order],
        count_total=raw["count_total"].to_numpy()[order],
        count_disaster=raw["count_disaster"].to_numpy()[order],
        span=span,
        _flat_key=flat,
    )


def slice_window(store: PanelStore, day_range: tuple[dt.date, dt.date],
                 dest_filter=None, include_zeros: bool = False) -> pd.DataFrame:
    """Cells in ``day_range`` (inclusive), sorted by (day, source, dest).

    With ``include_zeros`` the full (day, source, dest) grid is materialized so
    absent cells appear with count 0 (used for design-matrix construction).
    """
    if store.is_empty:
        raise PanelError("cannot slice an empty store")
    start, end = day_range
    if start > end:
        raise PanelError(f"empty day range: {start} > {end}")
    if start < store.span.first_day or end > store.span.last_day:
        raise PanelError(f"day range [{start}, {end}] outside panel span")

    lo = store.day_to_ordinal(start)
    hi = store.day_to_ordinal(end)

    if include_zeros:
        dests = np.arange(len(store.countries), dtype=np.int64)
        if dest_filter is not None:
            keep = {store.countries.index(c) for c in dest_filter}
            dests = np.array(sorted(keep), dtype=np.int64)
        days = np.arange(lo, hi + 1, dtype=np.int64)
        srcs = np.arange(len(store.sources), dtype=np.int64)
        day_g, src_g, dst_g = (a.ravel() for a in np.meshgrid(days, srcs, dests, indexing="ij"))
        frame = pd.DataFrame(
            {
                "day_ordinal": day_g,
                "source_idx": src_g,
                "dest_idx": dst_g,
                "count_total": store.lookup_counts(day_g, src_g, dst_g, "total"),
                "count_disaster": store.lookup_counts(day_g, src_g, dst_g, "disaster"),
            }
        )
        return frame

    mask = (store.day >= lo) & (store.day <= hi)
    if dest_filter is not None:
        keep = np.array([c in set(dest_filter) for c in store.countries])
        mask &= keep[store.dest_idx]
    return pd.DataFrame(
        {
            "day_ordinal": store.day[mask],
            "source_idx": store.source_idx[mask],
            "dest_idx": store.dest_idx[mask],
            "count_total": store.count_total[mask],
            "count_disaster": store.count_disaster[mask],
        }
    )
