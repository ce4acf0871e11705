"""Anomaly detectors trained on normal sessions only.

All scores are oriented "higher = more anomalous"; a sample is flagged as
stress when its score exceeds the model threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..errors import EmptySplit, InvalidConfig, NotEnoughNormals
from ..metrics import EvalReport, STRESS_METRICS, confusion, report
from . import iforest, lof, mcd, ocsvm

KINDS = ("robust_cov", "ocsvm", "iforest", "lof")
DISPLAY_NAMES = {
    "robust_cov": "Robust Covariance",
    "ocsvm": "One-Class SVM",
    "iforest": "Isolation Forest",
    "lof": "Local Outlier Factor",
}
DEFAULTS: dict[str, dict[str, Any]] = {
    "iforest": {"n_trees": 100, "subsample": 256, "seed": 0},
    "ocsvm": {"nu": 0.1, "gamma": None, "tol": 1e-10, "max_iter": 100000},
    "robust_cov": {"support_frac": 0.75, "n_starts": 50, "seed": 0, "quantile": 0.975, "consistency": True},
    "lof": {"k": 10},
}
DEFAULT_CONTAMINATION = 0.05

_FIT = {"iforest": iforest.fit, "ocsvm": ocsvm.fit, "robust_cov": mcd.fit, "lof": lof.fit}
_SCORE = {"iforest": iforest.score, "ocsvm": ocsvm.score, "robust_cov": mcd.score, "lof": lof.score}


@dataclass
class AnomalyModel:
    kind: str
    hyperparams: dict[str, Any]
    params: dict[str, Any]
    threshold: float = math.inf
    features: list[str] = field(default_factory=list)
    pipeline_hash: str = ""

    def score(self, X) -> np.ndarray:
        return _SCORE[self.kind](self.params, np.atleast_2d(np.asarray(X, dtype=float)))

    def predict(self, X) -> np.ndarray:
        """1 (stress) where the score exceeds the threshold."""
        return (self.score(X) > self.threshold).astype(int)

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "hyperparams": self.hyperparams, "params": self.params,
             "threshold": self.threshold, "features": self.features, "pipeline_hash": self.pipeline_hash},
            ensure_ascii=False, sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "AnomalyModel":
        d = json.loads(text)
        return cls(d["kind"], d["hyperparams"], d["params"], d["threshold"], d["features"], d["pipeline_hash"])


def calibrate_threshold(model: AnomalyModel, train_scores: Sequence[float],
                        contamination: float = DEFAULT_CONTAMINATION, rule: str | None = None) -> float:
    """Score threshold for a fitted detector.

    ``rule="quantile"``: the (1 - contamination) quantile of the training
    scores, linearly interpolated between order statistics. ``rule="chi2"``
    (robust_cov default): sqrt of the chi-squared quantile for the feature
    dimension.
    """
    rule = rule or ("chi2" if model.kind == "robust_cov" else "quantile")
    if rule == "chi2":
        return mcd.chi2_threshold(model.params)
    scores = np.asarray(train_scores, dtype=float)
    if len(scores) < 5:
        raise InvalidConfig("need at least 5 training scores to calibrate")
    if not 0 <= contamination < 1:
        raise InvalidConfig("contamination must lie in [0, 1)")
    return float(np.quantile(scores, 1.0 - contamination))


def fit_detector(kind: str, X, contamination: float = DEFAULT_CONTAMINATION, rule: str | None = None,
                 features=(), pipeline_hash: str = "", **hp) -> AnomalyModel:
    if kind not in _FIT:
        raise InvalidConfig(f"unknown detector kind {kind!r}")
    X = np.asarray(X, dtype=float)
    if len(X) == 0:
        raise EmptySplit("empty training split")
    hyper = {**DEFAULTS[kind], **hp}
    model = AnomalyModel(kind, hyper, _FIT[kind](X, **hyper), features=list(features), pipeline_hash=pipeline_hash)
    model.threshold = calibrate_threshold(model, model.score(X), contamination, rule)
    return model


def split_anomaly(labels, frac_normal_train: float = 0.33, seed: int = 0, of_normals: bool = False):
    """Train on ``floor(frac * n_total)`` normals drawn by seed, test on the rest.

    ``of_normals=True`` takes the fraction of the normal count instead.
    """
    labels = np.asarray(labels)
    normals = np.flatnonzero(labels == "normal")
    if not len(normals) or not (labels == "stress").any():
        raise NotEnoughNormals("both normal and stress samples are required")
    base = len(normals) if of_normals else len(labels)
    n_train = math.floor(frac_normal_train * base + 1e-9)
    if n_train > len(normals) or n_train < 1:
        raise NotEnoughNormals(f"need {n_train} normal samples, have {len(normals)}")
    rng = np.random.default_rng(seed)
    train = np.sort(rng.permutation(normals)[:n_train])
    test = np.setdiff1d(np.arange(len(labels)), train)
    return {"train": train, "test": test}


def evaluate_anomaly(model: AnomalyModel, train_X, test_X, test_y, name: str | None = None) -> EvalReport:
    """Train side scores the training normals against the threshold; its
    stress cells are undefined by construction and rendered as dashes."""
    if len(test_y) == 0:
        raise EmptySplit("test")
    counts = {}
    if len(train_X):
        counts["train"] = confusion(np.zeros(len(train_X), dtype=int), model.predict(train_X))
    counts["test"] = confusion(np.asarray(test_y), model.predict(test_X))
    return report(counts, name or DISPLAY_NAMES[model.kind], masked={"train": STRESS_METRICS})


__all__ = [
    "KINDS", "DEFAULTS", "AnomalyModel", "calibrate_threshold", "fit_detector",
    "split_anomaly", "evaluate_anomaly",
]
