"""Per-event attention estimates and disaster-type averages.

Every disaster gets one regression per foreign reporting country: a two-way
fixed-effects event study on the dyadic article-count panel, with dyad and day
effects absorbed and standard errors clustered two ways (source and
destination country).  Estimates whose t statistic misses 1.65 are shrunk to
zero before pooling.
"""

from common import demo_catalog, demo_estimates
from dyadnews.estimator import pool_by_type

estimates = demo_estimates()
catalog = demo_catalog()

print(f"{estimates['event_id'].nunique()} events x "
      f"{estimates['report_country'].nunique()} reporting countries "
      f"-> {len(estimates)} estimates\n")

example = estimates[estimates["event_id"] == estimates["event_id"].iloc[0]]
print("one event, a few reporting countries:")
print(example.head(5).to_string(index=False), "\n")

pools = pool_by_type(estimates, catalog)
print("mean attention increase by disaster type (log1p scale):")
print(pools.overall.to_string(index=False))
print("\nslope of each type's per-country means against earthquake means:")
for dtype, slope in sorted(pools.slopes.items()):
    print(f"  {dtype:15s} {slope:+.3f}")
print("\nthe planted ordering earthquake > technological > wildfire > storm > flood"
      " shows up directly in the pooled means.")
