"""End-to-end protocols on a labeled feature matrix.

The preprocessing pipeline is fitted on the supervised training split only.
Training rows keep their class-imputed values; every other row (and every
row fed to the anomaly detectors) goes through the label-free inference path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import anomaly, supervised
from .features import FeatureMatrix
from .metrics import EvalReport
from .preprocess import PipelineConfig, PipelineParams, apply_matrix, fit_pipeline
from .supervised import SplitSpec, split_dataset


@dataclass
class Prepared:
    params: PipelineParams
    splits: dict[str, np.ndarray]
    fit_view: FeatureMatrix      # training rows class-imputed, others inference-imputed
    inference_view: FeatureMatrix  # every row inference-imputed


def prepare(matrix: FeatureMatrix, seed: int, config: PipelineConfig | None = None,
            spec: SplitSpec | None = None) -> Prepared:
    spec = spec or SplitSpec(seed=seed)
    splits = split_dataset(matrix.labels, spec)
    reduced_train, params = fit_pipeline(matrix.rows(splits["train"]), config)
    inference = apply_matrix(matrix, params)
    fit_view = FeatureMatrix(list(inference.ids), list(inference.labels), list(inference.names),
                             inference.X.copy())
    fit_view.X[splits["train"]] = reduced_train.X
    return Prepared(params, splits, fit_view, inference)


def _xy(m: FeatureMatrix, idx) -> tuple[np.ndarray, np.ndarray]:
    return m.X[idx], m.y[idx]


def run_supervised(prep: Prepared, seed: int, kinds: Sequence[str] = supervised.KINDS,
                   hyperparams: Mapping[str, Mapping[str, Any]] | None = None,
                   grid_search: bool = True) -> dict[str, tuple[supervised.TrainedModel, EvalReport]]:
    hyperparams = hyperparams or {}
    m = prep.fit_view
    splits = {s: _xy(m, idx) for s, idx in prep.splits.items()}
    out = {}
    for kind in kinds:
        hp = dict(hyperparams.get(kind, {}))
        if "seed" in supervised.DEFAULTS[kind]:
            hp.setdefault("seed", seed)
        model = supervised.select_and_train(
            kind, splits["train"], splits["val"] if grid_search else None,
            prep.params.selected_features, prep.params.hash(), **hp,
        )
        out[kind] = (model, supervised.evaluate(model, splits))
    return out


def run_anomaly(prep: Prepared, seed: int, kinds: Sequence[str] = anomaly.KINDS,
                contamination: float = anomaly.DEFAULT_CONTAMINATION, frac_normal_train: float = 0.33,
                of_normals: bool = False, hyperparams: Mapping[str, Mapping[str, Any]] | None = None,
                ) -> tuple[dict[str, tuple[anomaly.AnomalyModel, EvalReport]], dict[str, np.ndarray]]:
    hyperparams = hyperparams or {}
    m = prep.inference_view
    split = anomaly.split_anomaly(m.labels, frac_normal_train, seed, of_normals)
    X_train = m.X[split["train"]]
    X_test, y_test = _xy(m, split["test"])
    out = {}
    for kind in kinds:
        hp = dict(hyperparams.get(kind, {}))
        if "seed" in anomaly.DEFAULTS[kind]:
            hp.setdefault("seed", seed)
        model = anomaly.fit_detector(kind, X_train, contamination, features=prep.params.selected_features,
                                     pipeline_hash=prep.params.hash(), **hp)
        out[kind] = (model, anomaly.evaluate_anomaly(model, X_train, X_test, y_test))
    return out, split


def chance_accuracy(y_true, y_pred) -> float:
    """Expected accuracy of a label-blind rule flagging the same fraction."""
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    f = y_pred.mean()
    pi = y_true.mean()
    return float((1 - f) * (1 - pi) + f * pi)
