"""Time and frequency features per session.

Time features (milliseconds) for a press ``a`` followed by a press ``b``::

    dwell    = a.up   - a.down
    flight   = b.down - a.down
    latency  = b.up   - a.down
    interval = b.down - a.up      (negative under rollover)
    up_up    = b.up   - a.up

Frequencies are presses per minute of session time. Each time feature of a
session is the arithmetic mean over its occurrences; it is absent (``None``)
when the key or n-gram never occurred.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ZeroDuration
from .events import Device, MOUSE_BUTTONS, Session, is_char_code

BIGRAMS = ("ст", "ен", "об", "но", "ни", "на", "па", "ко", "то", "ро")
TRIGRAMS = ("ени", "ост", "ого", "ств", "ско", "ста", "ани", "про", "ест", "тор")
SCHEMA_SPECIAL_KEYS = ("backspace", "del", "capslock", "shift", "tab", "alt", "esc")
PAIR_MEASURES = ("flight", "latency", "interval", "up_up")
BIGRAM_SUFFIXES = ("dwell_first", "dwell_second") + PAIR_MEASURES
TRIGRAM_SUFFIXES = ("dwell_first", "dwell_mid", "dwell_last") + tuple(
    f"{m}_{pos}" for m in PAIR_MEASURES for pos in ("first", "second")
)

# Cyrillic letters rendered with their Latin look-alikes, the way published
# feature names spell them ("cta_interval_first", "aни_interval_first").
LOOKALIKES = {"а": "a", "с": "c", "е": "e", "о": "o", "р": "p", "т": "t", "к": "k", "х": "x", "у": "y"}


def transliterate(name: str) -> str:
    return "".join(LOOKALIKES.get(ch, ch) for ch in name)


@dataclass(frozen=True)
class Press:
    code: str        # case-folded
    device: Device
    down: int
    up: int
    is_char: bool

    @property
    def dwell(self) -> int:
        return self.up - self.down


@dataclass(frozen=True)
class PairTiming:
    flight_ms: float
    latency_ms: float
    interval_ms: float
    up_up_ms: float

    @classmethod
    def between(cls, a: Press, b: Press) -> "PairTiming":
        return cls(b.down - a.down, b.up - a.down, b.down - a.up, b.up - a.up)

    def measure(self, name: str) -> float:
        return getattr(self, f"{name}_ms")


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    groups: Mapping[str, str]
    kinds: Mapping[str, str]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(self.resolve(name))

    def alias(self, name: str) -> str:
        return transliterate(name)

    def resolve(self, name: str) -> str:
        """Accept a canonical name or its transliterated alias."""
        if name in self.groups:
            return name
        for canon in self.names:
            if transliterate(canon) == name:
                return canon
        raise KeyError(name)

    def grams(self, group: str) -> list[str]:
        out = []
        for n in self.names:
            if self.groups[n] == group:
                g = n.split("_", 1)[0]
                if g not in out:
                    out.append(g)
        return out

    def keys(self, group: str) -> list[str]:
        out = []
        for n in self.names:
            if self.groups[n] == group:
                k = n.rsplit("_", 1)[0]
                if k not in out:
                    out.append(k)
        return out

    def to_json(self) -> str:
        rows = [{"name": n, "group": self.groups[n], "kind": self.kinds[n]} for n in self.names]
        return json.dumps(rows, ensure_ascii=False, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "FeatureSchema":
        rows = json.loads(text)
        return cls(
            tuple(r["name"] for r in rows),
            {r["name"]: r["group"] for r in rows},
            {r["name"]: r["kind"] for r in rows},
        )


def build_schema(
    bigrams: Sequence[str] = BIGRAMS,
    trigrams: Sequence[str] = TRIGRAMS,
    special_keys: Sequence[str] = SCHEMA_SPECIAL_KEYS,
    mouse_buttons: Sequence[str] = MOUSE_BUTTONS,
) -> FeatureSchema:
    names: list[str] = []
    groups: dict[str, str] = {}
    kinds: dict[str, str] = {}

    def add(name, group, kind):
        names.append(name)
        groups[name] = group
        kinds[name] = kind

    add("typing_speed", "global", "frequency")
    for group, keys in (("mouse", mouse_buttons), ("special", special_keys)):
        for key in keys:
            add(f"{key}_dwell", group, "time")
            add(f"{key}_freq", group, "frequency")
    for group, grams, suffixes in (("bigram", bigrams, BIGRAM_SUFFIXES), ("trigram", trigrams, TRIGRAM_SUFFIXES)):
        for gram in grams:
            for suffix in suffixes:
                add(f"{gram}_{suffix}", group, "time")
    return FeatureSchema(tuple(names), groups, kinds)


def default_schema() -> FeatureSchema:
    return build_schema()


@dataclass(frozen=True)
class FeatureVector:
    schema: FeatureSchema
    values: Mapping[str, float | None]
    label: str = "unlabeled"
    session_id: str = ""

    def __getitem__(self, name: str) -> float | None:
        return self.values[self.schema.resolve(name)]

    def as_array(self) -> np.ndarray:
        return np.array([np.nan if self.values[n] is None else self.values[n] for n in self.schema.names])


# -- per-session primitives ---------------------------------------------------

def presses(session: Session) -> list[Press]:
    """Matched down/up pairs ordered by down time (normalized session).

    Sessions are immutable, so the result is memoized on the session object.
    """
    cached = session.__dict__.get("_presses")
    if cached is None:
        cached = _build_presses(session)
        object.__setattr__(session, "_presses", cached)
    return list(cached)


def _build_presses(session: Session) -> tuple[Press, ...]:
    out: list[Press | None] = []
    open_: dict[tuple[Device, str], tuple[int, int]] = {}
    for ev in session.events:
        key = (ev.device, ev.code)
        if ev.is_down:
            open_[key] = (len(out), ev.t_ms)
            out.append(None)
        elif key in open_:
            slot, down = open_.pop(key)
            char = ev.device is Device.KEYBOARD and is_char_code(ev.code)
            out[slot] = Press(ev.code.lower() if char else ev.code, ev.device, down, ev.t_ms, char)
    return tuple(p for p in out if p is not None)


def _fold(code: str) -> str:
    return code.lower() if is_char_code(code) else code


def dwell_times(session: Session, code: str) -> list[int]:
    code = _fold(code)
    return [p.dwell for p in presses(session) if p.code == code]


def _gram_index(ps: Sequence[Press], lengths: Iterable[int] = (2, 3)) -> dict[str, list[tuple[int, ...]]]:
    """Every character run of the given lengths, keyed by its text."""
    index: dict[str, list[tuple[int, ...]]] = {}
    codes = [p.code if p.is_char else None for p in ps]
    for m in lengths:
        for i in range(len(codes) - m + 1):
            window = codes[i:i + m]
            if None not in window:
                index.setdefault("".join(window), []).append(tuple(range(i, i + m)))
    return index


def _occurrences(ps: Sequence[Press], gram: str) -> list[tuple[int, ...]]:
    m, chars = len(gram), list(gram)
    codes = [p.code if p.is_char else None for p in ps]
    return [tuple(range(i, i + m)) for i in range(len(codes) - m + 1) if codes[i:i + m] == chars]


def ngram_occurrences(session: Session, gram: str) -> list[tuple[int, ...]]:
    """Index tuples into ``presses(session)`` of each run matching ``gram``.

    A run is consecutive presses in down order; any non-character press
    (special key or mouse button) in between breaks it. Overlaps count.
    """
    if len(gram) not in (2, 3):
        raise ValueError("gram must have 2 or 3 characters")
    return _occurrences(presses(session), gram.lower())


def pair_timings(session: Session, first_code: str, second_code: str) -> list[PairTiming]:
    ps = presses(session)
    gram = _fold(first_code) + _fold(second_code)
    return [PairTiming.between(ps[i], ps[j]) for i, j in _occurrences(ps, gram)] if len(gram) == 2 else []


def _per_minute(count: int, duration_ms: int) -> float:
    if duration_ms <= 0:
        raise ZeroDuration("session duration must be positive")
    return count * 60000 / duration_ms


def typing_speed(session: Session) -> float:
    downs = sum(1 for ev in session.events if ev.is_down and ev.device is Device.KEYBOARD)
    return _per_minute(downs, session.duration_ms)


def press_frequency(session: Session, code: str) -> float:
    code = _fold(code)
    downs = sum(1 for ev in session.events if ev.is_down and _fold(ev.code) == code)
    return _per_minute(downs, session.duration_ms)


def _mean(values: list) -> float | None:
    return sum(values) / len(values) if values else None


def extract_features(session: Session, schema: FeatureSchema | None = None) -> FeatureVector:
    schema = schema or default_schema()
    duration = session.duration_ms
    if duration <= 0:
        raise ZeroDuration(session.id)
    ps = presses(session)
    grams = _gram_index(ps)
    values: dict[str, float | None] = {}

    n_kbd = sum(1 for p in ps if p.device is Device.KEYBOARD)
    values["typing_speed"] = _per_minute(n_kbd, duration)

    for group in ("mouse", "special"):
        for key in schema.keys(group):
            dwells = [p.dwell for p in ps if p.code == key]
            values[f"{key}_dwell"] = _mean(dwells)
            values[f"{key}_freq"] = _per_minute(len(dwells), duration)

    for gram in schema.grams("bigram"):
        acc: dict[str, list] = {s: [] for s in BIGRAM_SUFFIXES}
        for i, j in grams.get(gram, []):
            a, b = ps[i], ps[j]
            acc["dwell_first"].append(a.dwell)
            acc["dwell_second"].append(b.dwell)
            t = PairTiming.between(a, b)
            for m in PAIR_MEASURES:
                acc[m].append(t.measure(m))
        for s, vals in acc.items():
            values[f"{gram}_{s}"] = _mean(vals)

    for gram in schema.grams("trigram"):
        acc = {s: [] for s in TRIGRAM_SUFFIXES}
        for i, j, k in grams.get(gram, []):
            a, b, c = ps[i], ps[j], ps[k]
            acc["dwell_first"].append(a.dwell)
            acc["dwell_mid"].append(b.dwell)
            acc["dwell_last"].append(c.dwell)
            for pos, t in (("first", PairTiming.between(a, b)), ("second", PairTiming.between(b, c))):
                for m in PAIR_MEASURES:
                    acc[f"{m}_{pos}"].append(t.measure(m))
        for s, vals in acc.items():
            values[f"{gram}_{s}"] = _mean(vals)

    ordered = {n: values.get(n) for n in schema.names}
    return FeatureVector(schema, ordered, session.label, session.id)


# -- session-set matrices -----------------------------------------------------

@dataclass
class FeatureMatrix:
    """Rows are sessions, columns are features; NaN marks an absent value."""

    ids: list[str]
    labels: list[str]
    names: list[str]
    X: np.ndarray
    kinds: dict[str, str] | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.ids), len(self.names))

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def y(self) -> np.ndarray:
        """1 for stress, 0 otherwise."""
        return np.array([lab == "stress" for lab in self.labels], dtype=int)

    def columns(self, names: Sequence[str]) -> "FeatureMatrix":
        idx = [self.names.index(n) for n in names]
        kinds = {n: self.kinds[n] for n in names} if self.kinds else None
        return FeatureMatrix(list(self.ids), list(self.labels), list(names), self.X[:, idx], kinds)

    def rows(self, idx: Sequence[int]) -> "FeatureMatrix":
        idx = list(idx)
        return FeatureMatrix([self.ids[i] for i in idx], [self.labels[i] for i in idx],
                             list(self.names), self.X[idx], self.kinds)

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["session_id", "label", *self.names])
            for sid, lab, row in zip(self.ids, self.labels, self.X):
                w.writerow([sid, lab, *("" if math.isnan(v) else repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path: str | Path, kinds: dict[str, str] | None = None) -> "FeatureMatrix":
        with Path(path).open(encoding="utf-8", newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            ids, labels, rows = [], [], []
            for rec in r:
                ids.append(rec[0])
                labels.append(rec[1])
                rows.append([float(v) if v else np.nan for v in rec[2:]])
        names = header[2:]
        return cls(ids, labels, names, np.array(rows, dtype=float).reshape(len(ids), len(names)), kinds)


def build_matrix(vectors: Iterable[FeatureVector]) -> FeatureMatrix:
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no feature vectors")
    schema = vectors[0].schema
    X = np.array([v.as_array() for v in vectors])
    return FeatureMatrix([v.session_id for v in vectors], [v.label for v in vectors],
                         list(schema.names), X, dict(schema.kinds))


def extract_matrix(sessions: Iterable[Session], schema: FeatureSchema | None = None) -> FeatureMatrix:
    schema = schema or default_schema()
    return build_matrix(extract_features(s, schema) for s in sessions)
