"""Event data model and JSONL session logs.

One session is one log file: a stream of key and mouse-button down/up events
with session-relative millisecond timestamps. Lines look like::

    {"t_ms": 100, "dev": "kbd", "code": "а", "action": "down"}
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, TextIO

from .errors import EmptySession, MalformedLine, NegativeTimestamp, UnknownCode

log = logging.getLogger(__name__)

SPECIAL_KEYS = ("backspace", "del", "capslock", "shift", "tab", "alt", "esc", "enter", "space")
MOUSE_BUTTONS = ("mouse_left", "mouse_right")
LABELS = ("normal", "stress", "unlabeled")

_FIELDS = {"t_ms", "dev", "code", "action"}


class Device(str, Enum):
    KEYBOARD = "kbd"
    MOUSE = "mouse"


class Action(str, Enum):
    DOWN = "down"
    UP = "up"


def is_char_code(code: str) -> bool:
    """True for a single printable character (the n-gram alphabet)."""
    return len(code) == 1 and code.isprintable() and not code.isspace()


def _check_code(device: Device, code: str) -> None:
    if not code:
        raise UnknownCode("empty code")
    if device is Device.MOUSE:
        if code not in MOUSE_BUTTONS:
            raise UnknownCode(f"{code!r} is not a mouse button")
    elif not (is_char_code(code) or code in SPECIAL_KEYS):
        raise UnknownCode(f"{code!r} is not a keyboard code")


@dataclass(frozen=True)
class RawEvent:
    t_ms: int
    device: Device
    code: str
    action: Action

    def __post_init__(self):
        if self.t_ms < 0:
            raise NegativeTimestamp(f"t_ms={self.t_ms}")
        _check_code(self.device, self.code)

    @property
    def is_down(self) -> bool:
        return self.action is Action.DOWN

    def to_json(self) -> str:
        return json.dumps(
            {"t_ms": self.t_ms, "dev": self.device.value, "code": self.code, "action": self.action.value},
            ensure_ascii=False,
            separators=(",", ":"),
        )


@dataclass(frozen=True)
class NormalizationSummary:
    auto_repeat: int = 0
    orphan_up: int = 0
    unmatched_down: int = 0

    @property
    def repaired(self) -> int:
        return self.auto_repeat + self.orphan_up + self.unmatched_down

    def to_json(self, session_id: str = "") -> str:
        return json.dumps(
            {"session": session_id, "auto_repeat": self.auto_repeat,
             "orphan_up": self.orphan_up, "unmatched_down": self.unmatched_down},
            ensure_ascii=False, sort_keys=True,
        )


@dataclass(frozen=True)
class Session:
    id: str
    events: tuple[RawEvent, ...]
    label: str = "unlabeled"
    summary: NormalizationSummary = field(default_factory=NormalizationSummary, compare=False)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown label {self.label!r}")

    @property
    def duration_ms(self) -> int:
        if not self.events:
            return 0
        return self.events[-1].t_ms - self.events[0].t_ms


def parse_event_line(line: str, line_no: int | None = None) -> RawEvent:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"bad JSON: {exc.msg}", line_no) from None
    if not isinstance(obj, dict) or set(obj) != _FIELDS:
        raise MalformedLine(f"expected exactly the fields {sorted(_FIELDS)}", line_no)
    t_ms = obj["t_ms"]
    if not isinstance(t_ms, int) or isinstance(t_ms, bool):
        raise MalformedLine("t_ms must be an integer", line_no)
    try:
        device = Device(obj["dev"])
        action = Action(obj["action"])
    except ValueError as exc:
        raise MalformedLine(str(exc), line_no) from None
    if not isinstance(obj["code"], str):
        raise MalformedLine("code must be a string", line_no)
    return RawEvent(t_ms, device, obj["code"], action)


def normalize_session(session: Session) -> Session:
    """Repair a sorted event stream so every code alternates down/up.

    Repeated downs of one code (OS auto-repeat) collapse to the first, ups with
    no pending down are dropped, and downs still pending at the end of the
    session are dropped. Idempotent.
    """
    pending: dict[tuple[Device, str], int] = {}
    keep = [True] * len(session.events)
    auto_repeat = orphan_up = 0
    for i, ev in enumerate(session.events):
        key = (ev.device, ev.code)
        if ev.is_down:
            if key in pending:
                keep[i] = False
                auto_repeat += 1
            else:
                pending[key] = i
        elif key in pending:
            del pending[key]
        else:
            keep[i] = False
            orphan_up += 1
    for i in pending.values():
        keep[i] = False
    summary = NormalizationSummary(auto_repeat, orphan_up, len(pending))
    events = tuple(ev for ev, k in zip(session.events, keep) if k)
    return replace(session, events=events, summary=summary)


def make_session(session_id: str, events: Iterable[RawEvent], label: str = "unlabeled") -> Session:
    """Sort stably by timestamp and normalize."""
    ordered = sorted(events, key=lambda ev: ev.t_ms)
    return normalize_session(Session(session_id, tuple(ordered), label))


def load_session(path: str | Path, label: str = "unlabeled", diagnostics: TextIO | None = None) -> Session:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        raw = [parse_event_line(line, n) for n, line in enumerate(fh, 1) if line.strip()]
    if not raw:
        raise EmptySession(str(path))
    session = make_session(path.stem, raw, label)
    if session.summary.repaired:
        log.warning("%s: %d events repaired during normalization", path, session.summary.repaired)
    if diagnostics is not None:
        print(session.summary.to_json(session.id), file=diagnostics)
    return session


def dump_session(session: Session, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for ev in session.events:
            fh.write(ev.to_json() + "\n")


def load_session_dir(root: str | Path, diagnostics: TextIO | None = sys.stderr) -> list[Session]:
    """Load ``<root>/<label>/<session_id>.jsonl`` for label in {normal, stress}.

    Sessions are returned sorted by (label, id) so downstream matrices are
    independent of directory listing order.
    """
    root = Path(root)
    sessions = []
    for label in ("normal", "stress"):
        for path in sorted((root / label).glob("*.jsonl")):
            sessions.append(load_session(path, label))
    if diagnostics is not None:
        total = NormalizationSummary(
            sum(s.summary.auto_repeat for s in sessions),
            sum(s.summary.orphan_up for s in sessions),
            sum(s.summary.unmatched_down for s in sessions),
        )
        print(total.to_json(f"{root.name}/* ({len(sessions)} sessions)"), file=diagnostics)
    return sessions
