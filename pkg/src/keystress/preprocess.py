"""Four-stage preprocessing: rare-feature pruning, per-class std pruning,
per-class median imputation and chi-squared Select-K-Best.

``fit_pipeline`` records every fitted quantity in :class:`PipelineParams` so
``apply_pipeline`` can replay the same reduction on unlabeled vectors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllFeaturesDropped,
    EmptyClassFeature,
    KTooLarge,
    NegativeAfterShift,
    SingleClassInput,
    UnknownFeature,
)
from .features import FeatureMatrix, FeatureVector, default_schema

CLASSES = ("normal", "stress")

LEAKAGE_CAVEAT = (
    "note: training rows were imputed with class-specific medians (requires labels); "
    "inference imputes with normal-class medians, so train and test rows are not treated identically"
)


@dataclass(frozen=True)
class PipelineConfig:
    min_sessions: int = 3
    min_std_time: float = 1.0
    min_std_frequency: float = 0.01
    std_rule: str = "or"
    k: int = 3
    inference_policy: str = "normal_median"

    def __post_init__(self):
        if self.std_rule not in ("or", "and"):
            raise ValueError("std_rule must be 'or' or 'and'")
        if self.inference_policy not in ("normal_median", "pooled_median"):
            raise ValueError("inference_policy must be 'normal_median' or 'pooled_median'")


@dataclass
class PipelineParams:
    kept_features_stage1: list[str]
    kept_features_stage2: list[str]
    medians: dict[str, dict[str, float]]
    pooled_medians: dict[str, float]
    chi2_scores: dict[str, float]
    selected_features: list[str]
    shift_offsets: dict[str, float]
    config: PipelineConfig = field(default_factory=PipelineConfig)

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "PipelineParams":
        d = json.loads(text)
        d["config"] = PipelineConfig(**d["config"])
        return cls(**d)

    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()[:16]


def _labels(matrix: FeatureMatrix, labels: Sequence[str] | None) -> np.ndarray:
    labels = np.asarray(matrix.labels if labels is None else labels)
    if len(labels) != len(matrix):
        raise ValueError("labels length does not match matrix rows")
    return labels


def drop_rare_features(matrix: FeatureMatrix, min_sessions: int = 3) -> tuple[FeatureMatrix, list[str]]:
    """Drop features present in fewer than ``min_sessions`` sessions."""
    present = (~np.isnan(matrix.X)).sum(axis=0)
    kept = [n for n, c in zip(matrix.names, present) if c >= min_sessions]
    if not kept:
        raise AllFeaturesDropped(f"no feature present in >= {min_sessions} sessions")
    return matrix.columns(kept), kept


def class_stds(matrix: FeatureMatrix, labels: Sequence[str] | None = None) -> dict[str, np.ndarray]:
    """Population std of present values per class; 0 where a class has none."""
    labels = _labels(matrix, labels)
    out = {}
    for c in CLASSES:
        rows = matrix.X[labels == c]
        std = np.zeros(len(matrix.names))
        for j in range(len(matrix.names)):
            vals = rows[:, j][~np.isnan(rows[:, j])]
            if len(vals):
                std[j] = vals.std()
        out[c] = std
    return out


def _thresholds(matrix: FeatureMatrix, min_std) -> np.ndarray:
    if isinstance(min_std, Mapping):
        kinds = matrix.kinds or {}
        return np.array([min_std.get(n, min_std.get(kinds.get(n, "time"), 0.0)) for n in matrix.names])
    return np.full(len(matrix.names), float(min_std))


def drop_low_std(
    matrix: FeatureMatrix,
    labels: Sequence[str] | None = None,
    min_std: float | Mapping[str, float] = 1.0,
    rule: str = "or",
) -> tuple[FeatureMatrix, list[str]]:
    """Drop features whose within-class std is below ``min_std``.

    With ``rule="or"`` a feature goes if it is too flat in either class; with
    ``"and"`` only if flat in both. ``min_std`` may map feature names or
    kinds ("time", "frequency") to thresholds.
    """
    labels = _labels(matrix, labels)
    if not all((labels == c).any() for c in CLASSES):
        raise SingleClassInput("both normal and stress rows are required")
    stds = class_stds(matrix, labels)
    thr = _thresholds(matrix, min_std)
    low = [stds[c] < thr for c in CLASSES]
    drop = (low[0] | low[1]) if rule == "or" else (low[0] & low[1])
    kept = [n for n, d in zip(matrix.names, drop) if not d]
    if not kept:
        raise AllFeaturesDropped("every feature fell below the std threshold")
    return matrix.columns(kept), kept


def impute_medians(
    matrix: FeatureMatrix, labels: Sequence[str] | None = None
) -> tuple[FeatureMatrix, dict[str, dict[str, float]]]:
    """Fill absent cells with the median of present values of the same class."""
    labels = _labels(matrix, labels)
    X = matrix.X.copy()
    medians: dict[str, dict[str, float]] = {}
    for c in CLASSES:
        mask = labels == c
        if not mask.any():
            continue
        medians[c] = {}
        for j, name in enumerate(matrix.names):
            col = matrix.X[mask, j]
            present = col[~np.isnan(col)]
            if not len(present):
                raise EmptyClassFeature(f"{name} has no value in class {c}")
            m = float(np.median(present))
            medians[c][name] = m
            X[mask & np.isnan(matrix.X[:, j]), j] = m
    out = FeatureMatrix(list(matrix.ids), list(matrix.labels), list(matrix.names), X, matrix.kinds)
    return out, medians


def impute_for_inference(
    vector: Mapping[str, float | None], params: PipelineParams, policy: str | None = None
) -> dict[str, float]:
    policy = policy or params.config.inference_policy
    stage2 = params.kept_features_stage2
    unknown = set(vector) - set(stage2)
    if unknown:
        raise UnknownFeature(", ".join(sorted(unknown)))
    fill = params.medians["normal"] if policy == "normal_median" else params.pooled_medians
    out = {}
    for name in stage2:
        v = vector.get(name)
        out[name] = fill[name] if v is None or np.isnan(v) else float(v)
    return out


def shift_offsets(matrix: FeatureMatrix) -> dict[str, float]:
    """Per-feature offset ``min(min(x), 0)``; subtracting it makes values >= 0."""
    return {n: float(min(matrix.X[:, j].min(), 0.0)) for j, n in enumerate(matrix.names)}


def chi2_scores(
    matrix: FeatureMatrix, labels: Sequence[str] | None = None, offsets: Mapping[str, float] | None = None
) -> dict[str, float]:
    """Sum-based chi-squared score of each (dense) feature against the class.

    Observed class sums ``O_c`` of the shifted values are compared with the
    expected ``E_c = n_c / n * sum(x)``; score ``sum_c (O_c - E_c)^2 / E_c``.
    A feature summing to zero scores 0.
    """
    labels = _labels(matrix, labels)
    if np.isnan(matrix.X).any():
        raise ValueError("chi2_scores needs a dense (imputed) matrix")
    offsets = shift_offsets(matrix) if offsets is None else offsets
    X = matrix.X - np.array([offsets[n] for n in matrix.names])
    if (X < 0).any():
        raise NegativeAfterShift("shifted values must be non-negative")
    classes = [c for c in CLASSES if (labels == c).any()]
    n = len(labels)
    total = X.sum(axis=0)
    scores = np.zeros(X.shape[1])
    for c in classes:
        mask = labels == c
        observed = X[mask].sum(axis=0)
        expected = mask.sum() / n * total
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(expected > 0, (observed - expected) ** 2 / expected, 0.0)
        scores += term
    return {name: float(s) for name, s in zip(matrix.names, scores)}


def select_k_best(scores: Mapping[str, float], k: int = 3, order: Sequence[str] | None = None) -> list[str]:
    """Top ``k`` names by score; ties go to the name earlier in ``order``.

    ``order`` defaults to the default schema order (then insertion order for
    names outside it).
    """
    if k > len(scores):
        raise KTooLarge(f"k={k} > {len(scores)} scored features")
    if order is None:
        order = [n for n in default_schema().names if n in scores]
        order += [n for n in scores if n not in set(order)]
    rank = {n: i for i, n in enumerate(order)}
    fallback = len(rank)
    ranked = sorted(scores, key=lambda n: (-scores[n], rank.get(n, fallback)))
    return ranked[:k]


def fit_pipeline(
    matrix: FeatureMatrix, config: PipelineConfig | None = None
) -> tuple[FeatureMatrix, PipelineParams]:
    """Run all four stages on a labeled matrix.

    Returns the reduced training matrix (class-imputed, shifted, columns in
    descending score order) and the fitted parameters.
    """
    config = config or PipelineConfig()
    m1, kept1 = drop_rare_features(matrix, config.min_sessions)
    thresholds = {"time": config.min_std_time, "frequency": config.min_std_frequency}
    m2, kept2 = drop_low_std(m1, min_std=thresholds, rule=config.std_rule)
    m3, medians = impute_medians(m2)
    if set(medians) != set(CLASSES):
        raise SingleClassInput("both classes are required to fit the pipeline")
    pooled = {}
    for j, name in enumerate(m2.names):
        col = m2.X[:, j]
        pooled[name] = float(np.median(col[~np.isnan(col)]))
    offsets = shift_offsets(m3)
    scores = chi2_scores(m3, offsets=offsets)
    selected = select_k_best(scores, config.k, order=kept2)
    params = PipelineParams(kept1, kept2, medians, pooled, scores, selected, offsets, config)
    reduced = m3.columns(selected)
    reduced.X = reduced.X - np.array([offsets[n] for n in selected])
    return reduced, params


def apply_pipeline(vector: Mapping[str, float | None], params: PipelineParams, policy: str | None = None) -> np.ndarray:
    """Reduce one (possibly sparse) feature vector to the selected coordinates."""
    values = vector.values if isinstance(vector, FeatureVector) else vector
    stage2 = {n: values.get(n) for n in params.kept_features_stage2}
    dense = impute_for_inference(stage2, params, policy)
    return np.array([dense[n] - params.shift_offsets[n] for n in params.selected_features])


def apply_matrix(matrix: FeatureMatrix, params: PipelineParams, policy: str | None = None) -> FeatureMatrix:
    rows = []
    for row in matrix.X:
        vec = {n: (None if np.isnan(v) else float(v)) for n, v in zip(matrix.names, row)}
        rows.append(apply_pipeline(vec, params, policy))
    X = np.array(rows).reshape(len(matrix), len(params.selected_features))
    return FeatureMatrix(list(matrix.ids), list(matrix.labels), list(params.selected_features), X)


def fit_report(params: PipelineParams, n_schema: int | None = None) -> str:
    lines = []
    if n_schema is not None:
        lines.append(f"schema features: {n_schema}")
    c = params.config
    lines.append(f"after rare-feature pruning (min_sessions={c.min_sessions}): {len(params.kept_features_stage1)}")
    lines.append(
        f"after std pruning (rule={c.std_rule}, time<{c.min_std_time}, frequency<{c.min_std_frequency}, "
        f"checked within each class): {len(params.kept_features_stage2)}"
    )
    lines.append(f"selected k={c.k}:")
    for name in params.selected_features:
        lines.append(f"  {name} score={params.chi2_scores[name]:.4f} shift={params.shift_offsets[name]:g}")
    lines.append(LEAKAGE_CAVEAT)
    return "\n".join(lines)
