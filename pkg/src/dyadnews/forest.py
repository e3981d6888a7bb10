"""Random-forest decomposition of attention-estimate heterogeneity.

Bagged CART regression trees over (event, reporting-country) rows, with three
feature sets (dyadic connectedness only, disaster characteristics only,
combined), out-of-bag goodness of fit, permutation importance measured as the
OOB mean-squared-error increase, and a best-subset path over the dyadic
features.  Individual trees are fit with scikit-learn; bagging, OOB
accounting, seeds, and importance are handled here so results are
deterministic under the configured seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import joblib
import numpy as np
import pandas as pd
from sklearn.tree import DecisionTreeRegressor

from dyadnews.features import FeatureMatrix

# The ten consistently-available dyadic features used by the forest.
DYADIC_FOREST_FEATURES = (
    "distance_km", "contiguity", "same_country_ever", "colony",
    "religious_similarity", "linguistic_similarity", "cultural_similarity",
    "social_share", "export_share", "import_share",
)
DISASTER_FEATURES = ("dtype", "log_deaths", "duration_days")

FEATURE_SETS = {
    "dyadic_only": DYADIC_FOREST_FEATURES,
    "disaster_only": DISASTER_FEATURES,
    "combined": DISASTER_FEATURES + DYADIC_FOREST_FEATURES,
}

MODEL_FORMAT = "dyadnews-forest/1"


class ForestError(ValueError):
    """Raised on invalid forest configuration or training data."""


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 1000
    min_node_size: int = 30   # split only nodes with at least this many rows
    min_terminal: int = 10    # reject splits creating a child below this
    features_per_split: int | None = None  # default: ceil(p / 3)
    seed: int = 0
    feature_set: str = "combined"

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ForestError("n_trees must be at least 1")
        if self.min_terminal > self.min_node_size:
            raise ForestError("min_terminal cannot exceed min_node_size")
        if self.feature_set not in FEATURE_SETS:
            raise ForestError(f"unknown feature_set {self.feature_set!r}")


def build_training_frame(estimates: pd.DataFrame, features: FeatureMatrix, catalog,
                         use_shrunk: bool = False) -> pd.DataFrame:
    """Join estimates with disaster characteristics and dyadic features.

    One row per defined (event, reporting country) estimate; dyadic features
    are looked up at (reporting country, event country)."""
    cat = catalog.to_frame()[["event_id", "country", "dtype", "deaths", "duration_days"]]
    cat = cat.rename(columns={"country": "event_country"})
    df = estimates[~estimates["flags"].str.contains("undefined", na=False)].merge(
        cat, on="event_id", how="inner"
    )
    df = df.copy()
    df["value"] = df["beta_shrunk" if use_shrunk else "beta"].astype(float)
    df["log_deaths"] = np.log1p(df["deaths"].astype(float))
    df["duration_days"] = df["duration_days"].astype(float)

    wide = features.table.reindex(
        pd.MultiIndex.from_arrays([df["report_country"], df["event_country"]])
    )
    for name in DYADIC_FOREST_FEATURES:
        df[name] = wide[name].to_numpy() if name in wide.columns else np.nan
    keep = ["event_id", "report_country", "event_country", "value", "dtype"] + \
        ["log_deaths", "duration_days"] + list(DYADIC_FOREST_FEATURES)
    return df[keep].reset_index(drop=True)


def _encode(frame: pd.DataFrame, base_features: tuple[str, ...],
            dtype_categories: tuple[str, ...]) -> tuple[np.ndarray, list[str], dict[str, list[int]]]:
    """Numeric design matrix; dtype is one-hot against fixed categories.

    Returns the matrix, the encoded column names, and a map from base feature
    to its column indices (one-hot blocks stay grouped for permutation)."""
    cols, names = [], []
    groups: dict[str, list[int]] = {}
    for feat in base_features:
        if feat == "dtype":
            codes = frame["dtype"].astype(str)
            start = len(names)
            for cat in dtype_categories:
                cols.append((codes == cat).to_numpy(dtype=float))
                names.append(f"dtype={cat}")
            groups["dtype"] = list(range(start, len(names)))
        else:
            if feat not in frame.columns:
                raise ForestError(f"missing feature {feat!r} in input rows")
            cols.append(frame[feat].to_numpy(dtype=float))
            groups[feat] = [len(names)]
            names.append(feat)
    return np.column_stack(cols), names, groups


@dataclass
class ForestModel:
    config: ForestConfig
    base_features: tuple[str, ...]
    dtype_categories: tuple[str, ...]
    feature_names: list[str]
    feature_groups: dict[str, list[int]]
    trees: list = field(repr=False, default_factory=list)
    oob_masks: np.ndarray = field(repr=False, default=None)   # (n_trees, n) bool
    train_X: np.ndarray = field(repr=False, default=None)
    train_y: np.ndarray = field(repr=False, default=None)
    n_dropped: int = 0
    r2_oob: float = float("nan")

    @property
    def n_train(self) -> int:
        return len(self.train_y)

    def oob_predictions(self, X: np.ndarray) -> np.ndarray:
        """Mean prediction per training row over trees that did not see it."""
        total = np.zeros(len(X))
        count = np.zeros(len(X))
        for tree, mask in zip(self.trees, self.oob_masks):
            if mask.any():
                total[mask] += tree.predict(X[mask])
                count[mask] += 1
        with np.errstate(invalid="ignore"):
            return np.where(count > 0, total / np.maximum(count, 1), np.nan)

    def oob_mse(self, X: np.ndarray) -> float:
        pred = self.oob_predictions(X)
        ok = np.isfinite(pred)
        return float(np.mean((pred[ok] - self.train_y[ok]) ** 2))


def train_forest(frame: pd.DataFrame, config: ForestConfig) -> ForestModel:
    """Train a bagged regression forest on the joined estimate rows.

    Rows with missing values in the selected features are dropped (count kept
    on the model); dtype is one-hot encoded; each tree gets a counter-based
    seed so the fit is reproducible regardless of scheduling."""
    config.validate()
    base = FEATURE_SETS[config.feature_set]
    return _train_on_features(frame, config, base)


def _train_on_features(frame: pd.DataFrame, config: ForestConfig,
                       base: tuple[str, ...]) -> ForestModel:
    needed = [f for f in base if f != "dtype"]
    usable = frame.dropna(subset=[c for c in needed if c in frame.columns])
    n_dropped = len(frame) - len(usable)
    if len(usable) < 100:
        raise ForestError(f"need at least 100 training rows, got {len(usable)}")

    dtype_categories = tuple(sorted(usable["dtype"].astype(str).unique())) if "dtype" in base else ()
    X, names, groups = _encode(usable, base, dtype_categories)
    y = usable["value"].to_numpy(dtype=float)
    n, p = X.shape
    mtry = config.features_per_split or math.ceil(p / 3)

    trees = []
    oob_masks = np.zeros((config.n_trees, n), dtype=bool)
    total = np.zeros(n)
    count = np.zeros(n)
    for b in range(config.n_trees):
        rng = np.random.default_rng([config.seed, b])
        idx = rng.integers(0, n, n)
        tree = DecisionTreeRegressor(
            min_samples_split=config.min_node_size,
            min_samples_leaf=config.min_terminal,
            max_features=min(mtry, p),
            random_state=int(rng.integers(2**31 - 1)),
        )
        tree.fit(X[idx], y[idx])
        mask = np.ones(n, dtype=bool)
        mask[idx] = False
        oob_masks[b] = mask
        if mask.any():
            total[mask] += tree.predict(X[mask])
            count[mask] += 1
        trees.append(tree)

    seen = count > 0
    pred = total[seen] / count[seen]
    ss_res = float(np.sum((y[seen] - pred) ** 2))
    ss_tot = float(np.sum((y[seen] - y[seen].mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else float("nan")

    return ForestModel(
        config=config,
        base_features=tuple(base),
        dtype_categories=dtype_categories,
        feature_names=names,
        feature_groups=groups,
        trees=trees,
        oob_masks=oob_masks,
        train_X=X,
        train_y=y,
        n_dropped=n_dropped,
        r2_oob=r2,
    )


def permutation_importance(model: ForestModel, n_repeats: int = 10,
                           seed: int | None = None) -> dict[str, float]:
    """Scaled permutation importance: mean OOB MSE increase when a feature's
    values are shuffled, floored at 0 and scaled by the maximum."""
    base_mse = model.oob_mse(model.train_X)
    seed = model.config.seed if seed is None else seed
    raw = {}
    for f_idx, feat in enumerate(model.base_features):
        cols = model.feature_groups[feat]
        deltas = []
        for r in range(n_repeats):
            rng = np.random.default_rng([seed, 7_000_000 + f_idx, r])
            perm = rng.permutation(model.n_train)
            Xp = model.train_X.copy()
            Xp[:, cols] = Xp[perm][:, cols]
            deltas.append(model.oob_mse(Xp) - base_mse)
        raw[feat] = max(float(np.mean(deltas)), 0.0)
    top = max(raw.values()) if raw else 0.0
    if top == 0.0:
        return {k: 0.0 for k in raw}
    return {k: v / top for k, v in raw.items()}


def predict(model: ForestModel, rows: pd.DataFrame) -> np.ndarray:
    """Mean over tree predictions for new rows carrying all model features."""
    for feat in model.base_features:
        if feat not in rows.columns:
            raise ForestError(f"missing feature {feat!r} in prediction rows")
    X, _, _ = _encode(rows, model.base_features, model.dtype_categories)
    if not np.isfinite(X).all():
        bad = [model.feature_names[k] for k in np.unique(np.nonzero(~np.isfinite(X))[1])]
        raise ForestError(f"non-finite feature values in prediction rows: {bad}")
    acc = np.zeros(len(X))
    for tree in model.trees:
        acc += tree.predict(X)
    return acc / len(model.trees)


def best_subset_path(frame: pd.DataFrame, config: ForestConfig,
                     n_trees_path: int = 200) -> pd.DataFrame:
    """Fit one forest per non-empty subset of the ten dyadic features (so
    2^10 - 1 fits), always keeping the disaster characteristics.

    A reduced tree count is used along the path and flagged in the output."""
    path_config = replace(config, n_trees=n_trees_path, feature_set="combined")
    rows = []
    n_dyadic = len(DYADIC_FOREST_FEATURES)
    for mask in range(1, 2**n_dyadic):
        subset = tuple(
            DYADIC_FOREST_FEATURES[i] for i in range(n_dyadic) if mask & (1 << i)
        )
        model = _train_on_features(frame, path_config, DISASTER_FEATURES + subset)
        rows.append(
            {
                "subset_mask": mask,
                "subset": "+".join(subset),
                "n_features": len(subset),
                "r2_oob": model.r2_oob,
                "n_trees": n_trees_path,
                "reduced_trees": n_trees_path < config.n_trees,
            }
        )
    return pd.DataFrame(rows)


def save_model(model: ForestModel, path) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "config": model.config,
        "base_features": model.base_features,
        "dtype_categories": model.dtype_categories,
        "feature_names": model.feature_names,
        "feature_groups": model.feature_groups,
        "trees": model.trees,
        "oob_masks": model.oob_masks,
        "train_X": model.train_X,
        "train_y": model.train_y,
        "n_dropped": model.n_dropped,
        "r2_oob": model.r2_oob,
    }
    joblib.dump(payload, path, compress=0)


def load_model(path) -> ForestModel:
    payload = joblib.load(path)
    if payload.get("format") != MODEL_FORMAT:
        raise ForestError(f"unsupported model format {payload.get('format')!r}")
    return ForestModel(
        config=payload["config"],
        base_features=payload["base_features"],
        dtype_categories=payload["dtype_categories"],
        feature_names=payload["feature_names"],
        feature_groups=payload["feature_groups"],
        trees=payload["trees"],
        oob_masks=payload["oob_masks"],
        train_X=payload["train_X"],
        train_y=payload["train_y"],
        n_dropped=payload["n_dropped"],
        r2_oob=payload["r2_oob"],
    )
