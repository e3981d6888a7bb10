"""Dyadic event-study engine for cross-border media attention after natural disasters.

The package is organized around a sparse daily article-count panel
(:mod:`dyadnews.panel`), a disaster catalog (:mod:`dyadnews.catalog`), and a
per-event two-way fixed-effects estimator (:mod:`dyadnews.estimator`) whose
coefficient estimates feed heterogeneity analyses
(:mod:`dyadnews.heterogeneity`), random-forest decompositions
(:mod:`dyadnews.forest`), block-bootstrap inference
(:mod:`dyadnews.bootstrap`), and counterfactual "equivalent attention" queries
(:mod:`dyadnews.counterfactual`).  Synthetic worlds with planted ground truth
live in :mod:`dyadnews.synthetic`.
"""

__version__ = "0.1.0"

from dyadnews.panel import PanelStore, ingest_counts, transform_count
from dyadnews.catalog import DisasterEvent, EventCatalog, EventWindow, load_events, build_event_window

__all__ = [
    "PanelStore",
    "ingest_counts",
    "transform_count",
    "DisasterEvent",
    "EventCatalog",
    "EventWindow",
    "load_events",
    "build_event_window",
    "__version__",
]
