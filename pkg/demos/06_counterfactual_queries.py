"""Equivalent-attention questions and normalized comparison views.

Uses the trained forest to predict attention curves over a fatality grid and
answers: at what toll would German coverage of a Mexican earthquake match its
coverage of a Bangladeshi earthquake with 100 deaths?  Curves are made
monotone with pool-adjacent-violators before inversion; a target outside the
query curve's range is reported as out-of-range, never as a number.
"""

from common import demo_catalog, demo_estimates, demo_features
from dyadnews.counterfactual import equivalent_deaths, normalize_view, simulate_grid, grids_to_frame
from dyadnews.forest import ForestConfig, build_training_frame, train_forest

features = demo_features()
frame = build_training_frame(demo_estimates(), features, demo_catalog())
model = train_forest(frame, ForestConfig(n_trees=300, seed=0))

others = [c for c in features.countries() if c != "DEU"]
grids, skipped = simulate_grid(model, [("DEU", c, "earthquake") for c in others],
                               features)
by_affected = {g.affected_country: g for g in grids}
target = by_affected["BGD"]

print("equivalent tolls: German attention to a BGD earthquake with 100 deaths")
print("matches an earthquake in ... with roughly this many deaths:")
for country in ("IND", "MEX", "ITA", "USA"):
    eq = equivalent_deaths(target, by_affected[country], 100.0)
    if eq.out_of_range:
        print(f"  {country}: out of range (nearest grid endpoint {eq.nearest_endpoint:g})")
    else:
        print(f"  {country}: ~{eq.deaths_star:.0f} deaths")

table = grids_to_frame(grids)
at_100 = table[table["deaths"] == 100]
view = normalize_view(at_100, "country_of_reporting")
sub = view.values.sort_values("norm_value", ascending=False)
print("\nGermany's predicted attention at 100 deaths, normalized so the")
print("5th/95th percentile across affected countries map to -1/+1:")
print(sub[["affected_country", "beta_hat", "norm_value"]].head(6)
      .round(3).to_string(index=False))
print("\nserve these queries over HTTP with:"
      "\n  dyadnews forest ... --out out/ && dyadnews serve --model out/model.joblib"
      " --features artifacts/features.csv")
