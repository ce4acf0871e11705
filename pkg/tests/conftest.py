import sys
from functools import lru_cache
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from keystress.events import Action, Device, RawEvent, make_session  # noqa: E402
from keystress.features import extract_matrix  # noqa: E402
from keystress.synthgen import generate_dataset  # noqa: E402


def presses_session(presses, label="normal", sid="s"):
    """Build a session from (code, down, up) keyboard tuples; codes starting
    with ``mouse_`` become mouse buttons."""
    events = []
    for code, down, up in presses:
        dev = Device.MOUSE if code.startswith("mouse_") else Device.KEYBOARD
        events.append(RawEvent(down, dev, code, Action.DOWN))
        events.append(RawEvent(up, dev, code, Action.UP))
    return make_session(sid, events, label)


def typed(text, start=0, dwell=50, gap=100):
    """Non-overlapping presses for each character of ``text``."""
    out = []
    t = start
    for ch in text:
        out.append((ch, t, t + dwell))
        t += gap
    return out


@lru_cache(maxsize=None)
def dataset_matrix(seed=42, separation=1.6, n=50):
    return extract_matrix(generate_dataset(n, n, separation, seed=seed))


@pytest.fixture(scope="session")
def default_matrix():
    return dataset_matrix()


# one "PASS/FAIL" line per acceptance criterion, filled by test_acceptance
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
