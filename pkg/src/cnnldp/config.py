"""Scenario configuration loaded from YAML, plus the bundled presets."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .metrics import MetricsConfig
from .topology import NetworkConfig
from .traffic import TrafficConfig

__all__ = [
    "N_RB_RANGE",
    "REFERENCE_LEARNING_RATE",
    "DatasetSection",
    "ModelSection",
    "RunSection",
    "ScenarioConfig",
    "load_config",
    "preset_names",
]

N_RB_RANGE = (3, 11)
REFERENCE_LEARNING_RATE = 1.0e-4
SCHEDULERS = ("baseline", "cnn")


@dataclass
class DatasetSection:
    dir: str = "dataset"
    n_samples: int = 1000
    n_links: int = 8
    seed: int = 0
    max_demand: int = 8
    deadline_scale: tuple[float, float] = (1.2, 2.0)
    exclusion_factor: float = 1.5


@dataclass
class ModelSection:
    priority: str = "models/priority.cnn"
    rb: str = "models/rb.cnn"
    conv_filters: tuple[int, ...] = (8, 16)
    dense_units: tuple[int, ...] = (64, 32)
    rb_conv_filters: tuple[int, ...] = (4, 8)
    rb_dense_units: tuple[int, ...] = (32,)
    rb_rows: int = 8
    learning_rate: float = 0.05
    epochs: int = 100
    batch_size: int = 8
    l1_weight: float = 0.0
    mu: float = 0.5
    split: float = 0.8
    seed: int = 0


@dataclass
class RunSection:
    horizon: int = 100
    seed: int = 0
    scheduler: str = "baseline"
    gate_threshold: float = 0.1
    n_rb: int = 7
    exclusion_factor: float = 1.5


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    network: NetworkConfig = field(default_factory=NetworkConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    model: ModelSection = field(default_factory=ModelSection)
    run: RunSection = field(default_factory=RunSection)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    output: str = "."

    def validate(self) -> None:
        lo, hi = N_RB_RANGE
        if not lo <= self.run.n_rb <= hi:
            raise ConfigError(f"run.n_rb must lie in {lo}..{hi}, got {self.run.n_rb}")
        if self.run.horizon < 1:
            raise ConfigError(f"run.horizon must be >= 1, got {self.run.horizon}")
        if self.run.scheduler not in SCHEDULERS:
            raise ConfigError(f"run.scheduler must be one of {SCHEDULERS}, got {self.run.scheduler!r}")
        if not 0.0 <= self.run.gate_threshold <= 1.0:
            raise ConfigError(f"run.gate_threshold must lie in [0, 1], got {self.run.gate_threshold}")
        if not self.run.exclusion_factor > 0:
            raise ConfigError("run.exclusion_factor must be positive")
        if self.network.n_channels != self.run.n_rb:
            raise ConfigError("network.n_channels is set from run.n_rb; do not set it separately")
        m = self.model
        if m.learning_rate < 0 or m.l1_weight < 0 or m.mu < 0:
            raise ConfigError("model learning_rate, l1_weight and mu must be >= 0")
        if m.epochs < 0 or m.batch_size < 1 or m.rb_rows < 2:
            raise ConfigError("model epochs >= 0, batch_size >= 1 and rb_rows >= 2 required")
        if self.dataset.n_samples < 1 or self.dataset.n_links < 1:
            raise ConfigError("dataset n_samples and n_links must be >= 1")
        self.network.validate()
        self.traffic.validate()

    def replace(self, **sections) -> "ScenarioConfig":
        return dataclasses.replace(self, **sections)

    def with_run(self, **kw) -> "ScenarioConfig":
        return self.replace(run=dataclasses.replace(self.run, **kw))


def _tuples(d: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


def _section(cls, raw: Any, where: str):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError(f"section {where!r} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unknown keys in {where!r}: {sorted(extra)}")
    try:
        return cls(**_tuples(raw))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {where!r} section: {exc}") from exc


def from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    allowed = {"name", "network", "traffic", "dataset", "model", "run", "metrics", "output"}
    extra = set(raw) - allowed
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    run = _section(RunSection, raw.get("run"), "run")
    net_raw = dict(raw.get("network") or {})
    if "n_channels" in net_raw and net_raw["n_channels"] != run.n_rb:
        raise ConfigError("network.n_channels conflicts with run.n_rb")
    net_raw["n_channels"] = run.n_rb
    cfg = ScenarioConfig(
        name=str(raw.get("name", "scenario")),
        network=_section(NetworkConfig, net_raw, "network"),
        traffic=_section(TrafficConfig, raw.get("traffic"), "traffic"),
        dataset=_section(DatasetSection, raw.get("dataset"), "dataset"),
        model=_section(ModelSection, raw.get("model"), "model"),
        run=run,
        metrics=_section(MetricsConfig, raw.get("metrics"), "metrics"),
        output=str(raw.get("output", ".")),
    )
    cfg.validate()
    return cfg


def preset_names() -> list[str]:
    root = resources.files("cnnldp") / "presets"
    return sorted(p.name[: -len(".yaml")] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_config(source: str | Path) -> ScenarioConfig:
    """Load a YAML file, or a bundled preset by name (``network1`` ...)."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif str(source) in preset_names():
        text = (resources.files("cnnldp") / "presets" / f"{source}.yaml").read_text()
    else:
        raise ConfigError(f"no config file or preset named {source!r} (presets: {', '.join(preset_names())})")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: invalid YAML: {exc}") from exc
    return from_dict(raw or {})
