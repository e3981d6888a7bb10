"""Decomposing attention heterogeneity with bagged regression trees.

Fits forests on three feature sets — dyadic connectedness only, disaster
characteristics only, and both — and compares out-of-bag fit.  Permutation
importance then says which features carry the predictive weight.
"""

from common import demo_catalog, demo_estimates, demo_features
from dyadnews.forest import (
    ForestConfig,
    build_training_frame,
    permutation_importance,
    train_forest,
)

frame = build_training_frame(demo_estimates(), demo_features(), demo_catalog())
print(f"{len(frame)} training rows\n")

models = {}
for feature_set in ("dyadic_only", "disaster_only", "combined"):
    config = ForestConfig(n_trees=300, seed=0, feature_set=feature_set)
    models[feature_set] = train_forest(frame, config)
    print(f"{feature_set:14s} OOB R2 = {models[feature_set].r2_oob:.3f}")

print("\npermutation importance, combined model (scaled to the top feature):")
importance = permutation_importance(models["combined"], n_repeats=5)
for name, value in sorted(importance.items(), key=lambda kv: -kv[1])[:8]:
    print(f"  {name:22s} {value:.3f}")
print("\ndisaster characteristics set the level; social connectedness explains"
      " who pays attention.")
