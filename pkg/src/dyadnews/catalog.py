"""Disaster catalog and event-window construction."""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass

import pandas as pd

DISASTER_TYPES = (
    "earthquake",
    "flood",
    "storm",
    "drought",
    "extreme_temperature",
    "wildfire",
    "technological",
    "other",
)

EVENTS_COLUMNS = ["event_id", "country", "dtype", "start_day", "end_day", "deaths"]


class CatalogError(ValueError):
    """Raised on malformed or inconsistent event inputs."""


@dataclass(frozen=True)
class DisasterEvent:
    event_id: str
    country: str
    dtype: str
    start_day: dt.date
    end_day: dt.date
    deaths: int

    @property
    def duration_days(self) -> int:
        return (self.end_day - self.start_day).days + 1


@dataclass(frozen=True)
class EventWindow:
    event_id: str
    window_start: dt.date
    window_end: dt.date
    treat_start: dt.date
    treat_end: dt.date
    truncated: bool = False


@dataclass(frozen=True)
class EventCatalog:
    events: tuple[DisasterEvent, ...]

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def __getitem__(self, event_id: str) -> DisasterEvent:
        for ev in self.events:
            if ev.event_id == event_id:
                return ev
        raise KeyError(event_id)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "event_id": [e.event_id for e in self.events],
                "country": [e.country for e in self.events],
                "dtype": [e.dtype for e in self.events],
                "start_day": [e.start_day.isoformat() for e in self.events],
                "end_day": [e.end_day.isoformat() for e in self.events],
                "deaths": [e.deaths for e in self.events],
                "duration_days": [e.duration_days for e in self.events],
            }
        )

    def affected_countries(self) -> list[str]:
        return sorted({e.country for e in self.events})


def load_events(path) -> EventCatalog:
    """Load the events file, sorted by start day.

    Unknown disaster type strings map to ``other`` with a warning; duplicate
    event ids, end-before-start, and negative deaths are rejected.
    """
    raw = pd.read_csv(path, dtype={"event_id": str, "country": str, "dtype": str})
    missing = [c for c in EVENTS_COLUMNS if c not in raw.columns]
    if missing:
        raise CatalogError(f"events file missing columns {missing}")

    dup = raw["event_id"].duplicated()
    if dup.any():
        raise CatalogError(f"duplicate event_id {raw.loc[dup, 'event_id'].iloc[0]!r}")

    deaths = pd.to_numeric(raw["deaths"], errors="coerce")
    if deaths.isna().any() or (deaths < 0).any() or (deaths != deaths.round()).any():
        raise CatalogError("deaths must be non-negative integers")

    try:
        starts = pd.to_datetime(raw["start_day"], format="%Y-%m-%d").dt.date
        ends = pd.to_datetime(raw["end_day"], format="%Y-%m-%d").dt.date
    except (ValueError, TypeError) as exc:
        raise CatalogError(f"malformed event date: {exc}") from exc

    events = []
    for row, start, end, n_dead in zip(raw.itertuples(index=False), starts, ends, deaths.astype(int)):
        if end < start:
            raise CatalogError(f"event {row.event_id}: end_day before start_day")
        dtype = str(row.dtype).strip().lower()
        if dtype not in DISASTER_TYPES:
            warnings.warn(f"event {row.event_id}: unknown dtype {row.dtype!r} mapped to 'other'")
            dtype = "other"
        events.append(
            DisasterEvent(
                event_id=str(row.event_id),
                country=str(row.country),
                dtype=dtype,
                start_day=start,
                end_day=end,
                deaths=n_dead,
            )
        )
    events.sort(key=lambda e: (e.start_day, e.event_id))
    return EventCatalog(events=tuple(events))


def build_event_window(event: DisasterEvent, pad: int = 7, tau: int = 3,
                       span=None) -> EventWindow:
    """Analysis window [start - pad, end + pad] with treatment [start, start + tau].

    When a panel span is given the window is clipped to it (with a warning);
    a window entirely outside the span is an error.
    """
    if pad < 0 or tau < 0:
        raise CatalogError("pad and tau must be non-negative")
    w_start = event.start_day - dt.timedelta(days=pad)
    w_end = event.end_day + dt.timedelta(days=pad)
    truncated = False
    if span is not None:
        if w_end < span.first_day or w_start > span.last_day:
            raise CatalogError(
                f"event {event.event_id}: window [{w_start}, {w_end}] entirely outside panel span"
            )
        clipped_start = max(w_start, span.first_day)
        clipped_end = min(w_end, span.last_day)
        if (clipped_start, clipped_end) != (w_start, w_end):
            warnings.warn(f"event {event.event_id}: window truncated to panel span")
            truncated = True
        w_start, w_end = clipped_start, clipped_end
    t_start = event.start_day
    t_end = event.start_day + dt.timedelta(days=tau)
    t_start = max(t_start, w_start)
    t_end = min(t_end, w_end)
    return EventWindow(
        event_id=event.event_id,
        window_start=w_start,
        window_end=w_end,
        treat_start=t_start,
        treat_end=t_end,
        truncated=truncated,
    )


def overlap_flags(catalog: EventCatalog, pad: int = 7) -> dict[str, bool]:
    """Per-event diagnostic: does another event in the same country overlap its window."""
    flags = {e.event_id: False for e in catalog}
    by_country: dict[str, list[DisasterEvent]] = {}
    for e in catalog:
        by_country.setdefault(e.country, []).append(e)
    for events in by_country.values():
        for a in events:
            for b in events:
                if a.event_id == b.event_id:
                    continue
                a_start = a.start_day - dt.timedelta(days=pad)
                a_end = a.end_day + dt.timedelta(days=pad)
                if b.start_day <= a_end and b.end_day >= a_start:
                    flags[a.event_id] = True
    return flags
