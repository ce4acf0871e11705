"""Run configuration: one JSON document drives every CLI command.

Unknown keys are rejected so a typo cannot silently fall back to a default.
The config hash covers everything except ``paths``; moving a run directory
does not invalidate its artifacts.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

from . import anomaly, supervised
from .errors import ConfigInvalid
from .preprocess import PipelineConfig
from .supervised import SplitSpec
from .synthgen import TypistProfile


@dataclass
class Paths:
    out: str = "run"
    data: str | None = None  # defaults to <out>/sessions

    def data_root(self) -> Path:
        return Path(self.data) if self.data else Path(self.out) / "sessions"


@dataclass
class GeneratorConfig:
    n_normal: int = 50
    n_stress: int = 50
    separation: float = 1.6
    participants: int = 8
    target_keys: int = 800
    participant_jitter: float = 0.10
    session_jitter: float = 0.05
    profile: dict[str, Any] = field(default_factory=dict)  # TypistProfile overrides

    def base_profile(self) -> TypistProfile:
        known = {f.name for f in fields(TypistProfile)}
        unknown = set(self.profile) - known
        if unknown:
            raise ConfigInvalid(f"unknown profile fields: {', '.join(sorted(unknown))}")
        overrides = dict(self.profile)
        if "words" in overrides:
            overrides["words"] = tuple(overrides["words"])
        return TypistProfile(**overrides)


@dataclass
class SplitConfig:
    train: float = 0.49
    val: float = 0.21
    test: float = 0.30
    stratified: bool = True

    def spec(self, seed: int) -> SplitSpec:
        return SplitSpec(train_frac=self.train, val_frac=self.val, test_frac=self.test,
                         seed=seed, stratified=self.stratified)


@dataclass
class SupervisedConfig:
    models: list[str] = field(default_factory=lambda: list(supervised.KINDS))
    grid_search: bool = True
    undefined_as_zero: bool = True
    hyperparams: dict[str, dict[str, Any]] = field(default_factory=dict)


@dataclass
class AnomalyConfig:
    models: list[str] = field(default_factory=lambda: list(anomaly.KINDS))
    contamination: float = anomaly.DEFAULT_CONTAMINATION
    frac_normal_train: float = 0.33
    of_normals: bool = False
    hyperparams: dict[str, dict[str, Any]] = field(default_factory=dict)


_SECTIONS = {
    "paths": Paths,
    "generator": GeneratorConfig,
    "pipeline": PipelineConfig,
    "split": SplitConfig,
    "supervised": SupervisedConfig,
    "anomaly": AnomalyConfig,
}


@dataclass
class RunConfig:
    seed: int = 42
    paths: Paths = field(default_factory=Paths)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    supervised: SupervisedConfig = field(default_factory=SupervisedConfig)
    anomaly: AnomalyConfig = field(default_factory=AnomalyConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=1) + "\n"

    def hash(self) -> str:
        d = self.to_dict()
        del d["paths"]
        text = json.dumps(d, ensure_ascii=False, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigInvalid("config must be a JSON object")
        unknown = set(d) - {"seed", *_SECTIONS}
        if unknown:
            raise ConfigInvalid(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs: dict[str, Any] = {}
        if "seed" in d:
            if not isinstance(d["seed"], int) or isinstance(d["seed"], bool) or d["seed"] < 0:
                raise ConfigInvalid("seed must be a non-negative integer")
            kwargs["seed"] = d["seed"]
        for name, section in _SECTIONS.items():
            if name not in d:
                continue
            sub = d[name]
            if not isinstance(sub, dict):
                raise ConfigInvalid(f"{name} must be an object")
            allowed = {f.name for f in fields(section)}
            bad = set(sub) - allowed
            if bad:
                raise ConfigInvalid(f"unknown keys in {name}: {', '.join(sorted(bad))}")
            try:
                kwargs[name] = section(**copy.deepcopy(sub))
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid(f"{name}: {exc}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None = None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigInvalid(f"cannot read config {path}: {exc.strerror}") from None
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"{path}: bad JSON: {exc.msg}") from None
        return cls.from_dict(d)

    def validate(self) -> None:
        for kind in self.supervised.models:
            if kind not in supervised.KINDS:
                raise ConfigInvalid(f"unknown supervised model {kind!r}")
        for kind in self.anomaly.models:
            if kind not in anomaly.KINDS:
                raise ConfigInvalid(f"unknown anomaly model {kind!r}")
        for family, hp in (("supervised", self.supervised.hyperparams), ("anomaly", self.anomaly.hyperparams)):
            kinds = supervised.KINDS if family == "supervised" else anomaly.KINDS
            defaults = supervised.DEFAULTS if family == "supervised" else anomaly.DEFAULTS
            for kind, values in hp.items():
                if kind not in kinds:
                    raise ConfigInvalid(f"hyperparams for unknown {family} model {kind!r}")
                bad = set(values) - set(defaults[kind])
                if bad:
                    raise ConfigInvalid(f"unknown hyperparameters for {kind}: {', '.join(sorted(bad))}")
        if not 0 <= self.anomaly.contamination < 1:
            raise ConfigInvalid("contamination must lie in [0, 1)")
        if self.pipeline.k < 1:
            raise ConfigInvalid("k must be >= 1")
        s = self.split
        if min(s.train, s.val, s.test) < 0 or abs(s.train + s.val + s.test - 1.0) > 1e-9:
            raise ConfigInvalid("split fractions must be non-negative and sum to 1")


def default_config_text() -> str:
    """The bundled default config file."""
    return resources.files("keystress").joinpath("default_config.json").read_text(encoding="utf-8")
