"""Seeded synthetic typing sessions for a normal and a stressed profile.

Timings are log-normal. Under stress every time draw is divided by
``speedup`` and special-key rates are multiplied by ``error_rate_factor``, so
stressed sessions are faster and (optionally) more error-prone. A dataset
mimics a small participant pool: each participant gets one jittered profile
reused across their sessions, plus a small per-session jitter.

All defaults are invented for desk-scale experiments; none come from
measured data.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidProfile
from .events import Action, Device, RawEvent, Session, dump_session, normalize_session
from .features import BIGRAMS, TRIGRAMS

CORPUS = (
    "стена", "сторона", "основа", "гость", "просто", "против", "проект", "работа", "который", "только",
    "начало", "после", "новости", "общество", "обработка", "количество", "качество", "программа", "процесс",
    "история", "ответ", "отдел", "сотрудник", "система", "документ", "компания", "контакт", "вопрос",
    "решение", "значение", "понимание", "внимание", "задание", "данные", "ценность", "необходимо",
    "никогда", "время", "место", "часть", "страна", "станция", "сколько", "школа", "скорость", "того",
    "много", "строго", "тормоз", "автор", "директор", "монитор", "известно", "честно", "партнер", "папка",
    "память", "знание", "отправить", "нормально",
)


def coverage_words(corpus: Sequence[str] = CORPUS, grams: Sequence[str] = BIGRAMS + TRIGRAMS) -> list[str]:
    """Greedy word cover of ``grams``; typed first in every session."""
    missing = set(grams)
    chosen: list[str] = []
    while missing:
        best = max(corpus, key=lambda w: (sum(g in w for g in missing), -corpus.index(w)))
        gained = {g for g in missing if g in best}
        if not gained:
            raise InvalidProfile(f"corpus cannot cover {sorted(missing)}")
        chosen.append(best)
        missing -= gained
    return chosen


COVER = tuple(coverage_words())


def _default_special_rates() -> dict[str, float]:
    return {"backspace": 4.0, "shift": 10.0, "del": 1.0, "tab": 1.0,
            "capslock": 0.001, "esc": 0.001, "alt": 0.001}


@dataclass(frozen=True)
class TypistProfile:
    dwell_mean_ms: float = 85.0
    dwell_sigma: float = 0.35
    interval_mean_ms: float = 120.0
    interval_sigma: float = 0.5
    p_roll: float = 0.08
    special_key_rates: dict[str, float] = field(default_factory=_default_special_rates)
    click_rate: float = 6.0
    right_click_rate: float = 0.001
    click_dwell_mean_ms: float = 100.0
    click_dwell_sigma: float = 0.3
    pause_mean_ms: float = 500.0
    pause_sigma: float = 0.5
    speedup: float = 1.5
    error_rate_factor: float = 1.0
    words: tuple[str, ...] = CORPUS

    def validate(self) -> None:
        means = (self.dwell_mean_ms, self.interval_mean_ms, self.click_dwell_mean_ms, self.pause_mean_ms)
        sigmas = (self.dwell_sigma, self.interval_sigma, self.click_dwell_sigma, self.pause_sigma)
        if min(means) <= 0 or min(sigmas) <= 0:
            raise InvalidProfile("means and sigmas must be positive")
        if not 0 <= self.p_roll < 0.5:
            raise InvalidProfile("p_roll must lie in [0, 0.5)")
        if self.speedup <= 0 or self.error_rate_factor < 0:
            raise InvalidProfile("speedup must be positive and error_rate_factor non-negative")
        if min(self.special_key_rates.values(), default=0) < 0 or self.click_rate < 0 or self.right_click_rate < 0:
            raise InvalidProfile("rates must be non-negative")
        if not self.words:
            raise InvalidProfile("empty word list")

    @property
    def keys_per_minute(self) -> float:
        return 60000.0 / (self.dwell_mean_ms + self.interval_mean_ms)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["words"] = list(self.words)
        return d


def _lognormal(rng: np.random.Generator, mean: float, sigma: float) -> float:
    """Log-normal draw parameterized by its arithmetic mean."""
    return float(np.exp(math.log(mean) - sigma * sigma / 2 + sigma * rng.standard_normal()))


class _Typist:
    def __init__(self, profile: TypistProfile, is_stress: bool, rng: np.random.Generator):
        self.p = profile
        self.scale = 1.0 / profile.speedup if is_stress else 1.0
        self.rate_factor = profile.error_rate_factor if is_stress else 1.0
        self.rng = rng
        self.events: list[RawEvent] = []
        self.t = 0          # next down time
        self.last_up: dict[str, int] = {}
        self.prev: tuple[str, int, int] | None = None   # code, down, up
        self.n_keys = 0

    def _time(self, mean, sigma) -> float:
        return _lognormal(self.rng, mean, sigma) * self.scale

    def _emit(self, device, code, down, up):
        self.events.append(RawEvent(down, device, code, Action.DOWN))
        self.events.append(RawEvent(up, device, code, Action.UP))
        self.last_up[code] = up

    def key(self, code: str) -> None:
        p = self.p
        dwell = max(1, round(self._time(p.dwell_mean_ms, p.dwell_sigma)))
        gap = self._time(p.interval_mean_ms, p.interval_sigma)
        roll = self.rng.random() < p.p_roll
        frac = self.rng.random()
        down = self.t
        if code in self.last_up:
            down = max(down, self.last_up[code] + 1)
        up = down + dwell
        self._emit(Device.KEYBOARD, code, down, up)
        self.n_keys += 1
        if roll:
            # next key goes down before this one is released
            nxt = down + max(1, math.floor(dwell * (0.2 + 0.7 * frac)))
        else:
            nxt = up + max(1, round(gap))
        self.t = nxt

    def pause(self) -> None:
        self.t += max(1, round(self._time(self.p.pause_mean_ms, self.p.pause_sigma)))

    def click(self, code: str) -> None:
        self.pause()
        dwell = max(1, round(self._time(self.p.click_dwell_mean_ms, self.p.click_dwell_sigma)))
        down = max(self.t, self.last_up.get(code, -1) + 1)
        self._emit(Device.MOUSE, code, down, down + dwell)
        self.t = down + dwell + max(1, round(self._time(self.p.interval_mean_ms, self.p.interval_sigma)))

    def boundary_events(self, keys_since: int) -> bool:
        """Specials and clicks between words; returns True if shift was pressed."""
        p = self.p
        per_key = keys_since / p.keys_per_minute
        shifted = False
        for code in sorted(p.special_key_rates):
            prob = min(1.0, p.special_key_rates[code] * self.rate_factor * per_key)
            if self.rng.random() < prob:
                if code == "shift":
                    shifted = True
                else:
                    self.key(code)
        for code, rate in (("mouse_left", p.click_rate), ("mouse_right", p.right_click_rate)):
            if self.rng.random() < min(1.0, rate * per_key):
                self.click(code)
        return shifted

    def word(self, word: str, shifted: bool) -> None:
        if shifted:
            shift_down = self.t
            self.t = shift_down + max(1, round(self._time(self.p.interval_mean_ms, self.p.interval_sigma) / 2))
            self.events.append(RawEvent(shift_down, Device.KEYBOARD, "shift", Action.DOWN))
            self.n_keys += 1
            self.key(word[0].upper())
            shift_up = self.last_up[word[0].upper()] + max(1, round(self._time(20.0, 0.3)))
            self.events.append(RawEvent(shift_up, Device.KEYBOARD, "shift", Action.UP))
            self.last_up["shift"] = shift_up
            rest = word[1:]
        else:
            rest = word
        for ch in rest:
            self.key(ch)


def generate_session(profile: TypistProfile, is_stress: bool, target_keys: int = 800, seed: int = 0,
                     session_id: str | None = None) -> Session:
    """Type words until at least ``target_keys`` keyboard presses are emitted.

    The first words always cover every tracked bigram and trigram.
    """
    profile.validate()
    if target_keys < 20:
        raise InvalidProfile("target_keys must be >= 20")
    rng = np.random.default_rng(seed)
    typist = _Typist(profile, is_stress, rng)
    corpus = list(profile.words)
    queue = [COVER[i] for i in rng.permutation(len(COVER))]
    shifted = False
    while typist.n_keys < target_keys:
        word = queue.pop() if queue else corpus[int(rng.integers(len(corpus)))]
        before = typist.n_keys
        typist.word(word, shifted)
        typist.key("space")
        shifted = typist.boundary_events(typist.n_keys - before)
    label = "stress" if is_stress else "normal"
    events = sorted(typist.events, key=lambda ev: ev.t_ms)
    sid = session_id or f"{label}_{seed}"
    return normalize_session(Session(sid, tuple(events), label))


@dataclass(frozen=True)
class DatasetSpec:
    n_normal: int = 50
    n_stress: int = 50
    separation: float = 1.6
    seed: int = 42
    participants: int = 8
    target_keys: int = 800
    participant_jitter: float = 0.10
    session_jitter: float = 0.05


def _jitter(profile: TypistProfile, rng: np.random.Generator, sigma: float) -> TypistProfile:
    f = np.exp(sigma * rng.standard_normal(3))
    rates = {k: v * float(np.exp(2 * sigma * rng.standard_normal())) for k, v in sorted(profile.special_key_rates.items())}
    return replace(
        profile,
        dwell_mean_ms=profile.dwell_mean_ms * float(f[0]),
        interval_mean_ms=profile.interval_mean_ms * float(f[1]),
        click_dwell_mean_ms=profile.click_dwell_mean_ms * float(f[2]),
        special_key_rates=rates,
    )


def generate_dataset(n_normal: int = 50, n_stress: int = 50, separation: float = 1.6,
                     base_profile: TypistProfile | None = None, seed: int = 42, participants: int = 8,
                     target_keys: int = 800, participant_jitter: float = 0.10,
                     session_jitter: float = 0.05) -> list[Session]:
    """Labeled sessions; ``separation`` is the stress speedup (1.0 = no contrast)."""
    if n_normal < 1 or n_stress < 1:
        raise InvalidProfile("need at least one session per class")
    if separation < 1:
        raise InvalidProfile("separation must be >= 1")
    base = base_profile or TypistProfile()
    base.validate()
    rng = np.random.default_rng(seed)
    people = [_jitter(base, rng, participant_jitter) for _ in range(max(1, participants))]
    sessions = []
    for i in range(n_normal + n_stress):
        is_stress = i >= n_normal
        srng = np.random.default_rng([seed, i])
        prof = replace(_jitter(people[i % len(people)], srng, session_jitter), speedup=separation)
        label = "stress" if is_stress else "normal"
        idx = i - n_normal if is_stress else i
        sub_seed = int(srng.integers(2**32))
        sessions.append(generate_session(prof, is_stress, target_keys, sub_seed, f"{label}_{idx:03d}"))
    return sessions


def write_dataset(sessions: Sequence[Session], root: str | Path, manifest: dict | None = None) -> Path:
    """Write ``<root>/<label>/<id>.jsonl`` plus ``manifest.json``."""
    root = Path(root)
    for s in sessions:
        dump_session(s, root / s.label / f"{s.id}.jsonl")
    if manifest is not None:
        (root / "manifest.json").write_text(json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=1) + "\n",
                                            encoding="utf-8")
    return root
