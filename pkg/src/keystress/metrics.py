"""Confusion-matrix metrics and Table-style report rendering.

Stress is the positive class. A precision is undefined when its class is
never predicted, a recall when its class never occurs; undefined cells render
as "—" by default or as 0 with ``undefined_as_zero``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import LengthMismatch

DASH = "—"
METRICS = ("precision_not_stress", "precision_stress", "recall_not_stress", "recall_stress", "accuracy")
STRESS_METRICS = ("precision_stress", "recall_stress")
HEADERS = {
    "precision_not_stress": "Precision Not-Stress",
    "precision_stress": "Precision Stress",
    "recall_not_stress": "Recall Not-Stress",
    "recall_stress": "Recall Stress",
    "accuracy": "Accuracy",
}


def _is_stress(v) -> bool:
    return v == "stress" or v == 1 or v is True


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def swapped(self) -> "Confusion":
        """Same predictions with not-stress as the positive class."""
        return Confusion(self.tn, self.fn, self.fp, self.tp)


def confusion(labels: Sequence, predictions: Sequence) -> Confusion:
    if len(labels) != len(predictions) or len(labels) == 0:
        raise LengthMismatch(f"{len(labels)} labels vs {len(predictions)} predictions")
    tp = fp = fn = tn = 0
    for t, p in zip(labels, predictions):
        t, p = _is_stress(t), _is_stress(p)
        if t and p:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return Confusion(tp, fp, fn, tn)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


@dataclass
class SplitMetrics:
    counts: Confusion
    values: dict[str, float | None]
    masked: frozenset[str] = frozenset()

    @classmethod
    def from_counts(cls, c: Confusion, masked: Iterable[str] = ()) -> "SplitMetrics":
        values = {
            "precision_not_stress": _ratio(c.tn, c.tn + c.fn),
            "precision_stress": _ratio(c.tp, c.tp + c.fp),
            "recall_not_stress": _ratio(c.tn, c.tn + c.fp),
            "recall_stress": _ratio(c.tp, c.tp + c.fn),
            "accuracy": _ratio(c.tp + c.tn, c.total),
        }
        return cls(c, values, frozenset(masked))

    @property
    def undefined(self) -> set[str]:
        return {m for m, v in self.values.items() if v is None and m not in self.masked}


@dataclass
class EvalReport:
    model: str
    splits: dict[str, SplitMetrics] = field(default_factory=dict)
    undefined_as_zero: bool = False

    def get(self, split: str, metric: str) -> float | None:
        sm = self.splits[split]
        if metric in sm.masked:
            return None
        v = sm.values[metric]
        if v is None and self.undefined_as_zero:
            return 0.0
        return v

    def cell(self, split: str, metric: str) -> str:
        if split not in self.splits:
            return DASH
        v = self.get(split, metric)
        return DASH if v is None else f"{v:.2f}"

    @property
    def flags(self) -> dict[str, set[str]]:
        """Metrics whose value was undefined (divide by zero), per split."""
        return {s: sm.undefined for s, sm in self.splits.items() if sm.undefined}


def report(
    counts: Mapping[str, Confusion],
    model: str = "",
    masked: Mapping[str, Iterable[str]] | None = None,
    undefined_as_zero: bool = False,
) -> EvalReport:
    masked = masked or {}
    splits = {s: SplitMetrics.from_counts(c, masked.get(s, ())) for s, c in counts.items()}
    return EvalReport(model, splits, undefined_as_zero)


def render_markdown(reports: Sequence[EvalReport], left: str = "train", right: str = "test") -> str:
    head = ["№", "Algorithm"] + [f"{HEADERS[m]} ({left} / {right})" for m in METRICS]
    lines = ["| " + " | ".join(head) + " |", "|" + "|".join("---" for _ in head) + "|"]
    for i, r in enumerate(reports, 1):
        cells = [str(i), r.model] + [f"{r.cell(left, m)} / {r.cell(right, m)}" for m in METRICS]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _csv_value(r: EvalReport, split: str, metric: str) -> str:
    v = r.get(split, metric)
    return DASH if v is None else repr(float(v))


def render_csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "split", "metric", "value"])
    for r in reports:
        for split in r.splits:
            for m in METRICS:
                w.writerow([r.model, split, m, _csv_value(r, split, m)])
    return buf.getvalue()


def render(reports: EvalReport | Sequence[EvalReport], style: str = "markdown") -> str:
    if isinstance(reports, EvalReport):
        reports = [reports]
    if style == "markdown":
        return render_markdown(reports)
    if style == "csv":
        return render_csv(reports)
    raise ValueError(f"unknown style {style!r}")
