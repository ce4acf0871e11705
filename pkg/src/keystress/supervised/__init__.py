"""Supervised stress classifiers and the train/validation/test protocol."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

import numpy as np

from ..errors import EmptySplit, InvalidConfig
from ..metrics import EvalReport, confusion, report
from . import knn, linear, mlp, trees
from .split import SplitSpec, split_dataset

KINDS = ("logreg", "knn", "random_forest", "mlp", "gboost")
DISPLAY_NAMES = {
    "logreg": "Logistic Regression",
    "knn": "k-NN",
    "random_forest": "Random Forest",
    "mlp": "Multi-Layer Perceptron",
    "gboost": "Gradient Boosting",
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "logreg": {"lr": 0.1, "epochs": 500, "l2": 1e-3, "standardize": False},
    "knn": {"k": 3},
    "random_forest": {"n_trees": 100, "max_depth": 8, "min_leaf": 1, "n_features_per_split": None,
                      "bootstrap": True, "seed": 0},
    "gboost": {"n_stages": 100, "lr": 0.1, "max_depth": 2, "min_leaf": 1},
    "mlp": {"hidden_sizes": [16], "lr": 0.05, "epochs": 1000, "seed": 0, "standardize": False},
}

# Validation grid; the first entry of each list is the default.
GRIDS: dict[str, dict[str, list]] = {
    "logreg": {"l2": [1e-3, 1e-2, 1e-1]},
    "knn": {"k": [3, 1, 5, 7]},
    "random_forest": {"max_depth": [8, 4]},
    "gboost": {"n_stages": [100, 50]},
    "mlp": {"hidden_sizes": [[16], [8]]},
}

_FIT: dict[str, Callable] = {
    "logreg": linear.fit,
    "knn": knn.fit,
    "random_forest": trees.fit_random_forest,
    "gboost": trees.fit_gboost,
    "mlp": mlp.fit,
}
_PREDICT: dict[str, Callable] = {
    "logreg": linear.predict,
    "knn": knn.predict,
    "random_forest": trees.predict_random_forest,
    "gboost": trees.predict_gboost,
    "mlp": mlp.predict,
}


@dataclass
class TrainedModel:
    kind: str
    hyperparams: dict[str, Any]
    params: dict[str, Any]
    features: list[str] = field(default_factory=list)
    pipeline_hash: str = ""

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return _PREDICT[self.kind](self.params, X)

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "hyperparams": self.hyperparams, "params": self.params,
             "features": self.features, "pipeline_hash": self.pipeline_hash},
            ensure_ascii=False, sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TrainedModel":
        d = json.loads(text)
        return cls(d["kind"], d["hyperparams"], d["params"], d["features"], d["pipeline_hash"])


def train(kind: str, X, y, features=(), pipeline_hash: str = "", **hp) -> TrainedModel:
    if kind not in _FIT:
        raise InvalidConfig(f"unknown model kind {kind!r}")
    if len(X) == 0:
        raise EmptySplit("empty training split")
    hyper = {**DEFAULTS[kind], **hp}
    params = _FIT[kind](X, y, **hyper)
    return TrainedModel(kind, hyper, params, list(features), pipeline_hash)


def _grid(kind: str):
    grid = GRIDS.get(kind, {})
    combos: list[dict] = [{}]
    for key, values in grid.items():
        combos = [{**c, key: v} for c in combos for v in values]
    return combos


def select_and_train(kind: str, train_xy, val_xy=None, features=(), pipeline_hash="", **hp) -> TrainedModel:
    """Pick hyperparameters by validation accuracy (ties keep the earlier
    grid entry), then return the model trained on the training split."""
    X, y = train_xy
    if val_xy is None or not len(val_xy[0]):
        return train(kind, X, y, features, pipeline_hash, **hp)
    best, best_acc = None, -1.0
    for combo in _grid(kind):
        if kind == "knn" and combo.get("k", 1) > len(X):
            continue
        model = train(kind, X, y, features, pipeline_hash, **{**hp, **combo})
        acc = float(np.mean(model.predict(val_xy[0]) == np.asarray(val_xy[1])))
        if acc > best_acc:
            best, best_acc = model, acc
    return best


def evaluate(model: TrainedModel, splits: Mapping[str, tuple], undefined_as_zero: bool = True,
             name: str | None = None) -> EvalReport:
    """Per-split precision / recall / accuracy. Never-predicted classes get a
    precision of 0 and are listed in ``report.flags``."""
    counts = {}
    for split, (X, y) in splits.items():
        if len(y) == 0:
            raise EmptySplit(split)
        counts[split] = confusion(np.asarray(y), model.predict(X))
    return report(counts, name or DISPLAY_NAMES.get(model.kind, model.kind), undefined_as_zero=undefined_as_zero)


__all__ = [
    "KINDS", "DEFAULTS", "GRIDS", "TrainedModel", "SplitSpec", "split_dataset",
    "train", "select_and_train", "evaluate",
]
