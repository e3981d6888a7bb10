"""How attention scales with fatalities.

Bins events by ln(1 + deaths) and shows the mean estimated attention increase
per bin, then fits the per-reporting-country death gradient: the slope of the
attention estimates in log fatalities, and its ratio to the country's baseline
increase.
"""

from common import demo_catalog, demo_estimates
from dyadnews.heterogeneity import binned_death_curve, death_gradient_by_country

estimates = demo_estimates()
catalog = demo_catalog()

curve = binned_death_curve(estimates, catalog, n_bins=8)
print("binned death curve (8 quantile bins of ln(1+deaths)):")
print(curve.to_string(index=False), "\n")

gradients = death_gradient_by_country(estimates, catalog, min_events=10)
print("per-country gradients (xi = baseline increase, nu = slope in ln(1+deaths)):")
print(f"{'country':8s} {'xi':>8s} {'nu':>8s} {'nu/xi':>8s} {'events':>7s}")
for g in sorted(gradients, key=lambda g: -g.nu)[:10]:
    print(f"{g.report_country:8s} {g.xi:8.3f} {g.nu:8.3f} {g.ratio:8.2f} {g.n_events:7d}")
print("\na positive nu everywhere: deadlier disasters draw more foreign coverage.")
