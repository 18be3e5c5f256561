"""Experiment configuration: TOML in, canonical TOML out.

A config file fully determines an experiment; round-tripping any parse
through ``canonical_toml`` is byte-identical, and the sha256 of that
canonical form is embedded in every output an experiment writes, so a
report can always be traced back to the exact inputs that produced it.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..evolution import StepConfig
from ..field import DomainConfig

__all__ = [
    "DetectorConfig",
    "ExperimentConfig",
    "InitialSpec",
    "MorawetzJob",
    "canonical_toml",
    "config_hash",
    "load_config",
    "parse_config",
]

_INITIAL_KINDS = ("ground_state_scaled", "product_state", "file")


@dataclass(frozen=True)
class InitialSpec:
    """How the run builds its initial state.

    ``ground_state_scaled``: solve for the ground state on the experiment
    grid and multiply by ``scale`` (the dichotomy experiments).
    ``product_state``: Gaussian-in-x times a single Hermite mode.
    ``file``: load a previously saved field snapshot from ``path``.
    """

    kind: str = "ground_state_scaled"
    scale: float = 1.0
    sigma: float = 1.0
    center: float = 0.0
    momentum: float = 0.0
    hermite_n: int = 0
    amplitude: float = 1.0
    path: str = ""

    def __post_init__(self):
        if self.kind not in _INITIAL_KINDS:
            raise ValueError(f"initial.kind must be one of {_INITIAL_KINDS}, got {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("initial.kind = 'file' requires initial.path")
        if self.scale <= 0:
            raise ValueError(f"initial.scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class DetectorConfig:
    """Thresholds for the blow-up and scattering-proxy detectors."""

    blowup_factor: float = 100.0
    potential_decay_factor: float = 4.0
    cauchy_windows: int = 3

    def __post_init__(self):
        if self.blowup_factor <= 1.0:
            raise ValueError(f"blowup_factor must exceed 1, got {self.blowup_factor}")
        if self.potential_decay_factor <= 1.0:
            raise ValueError(
                f"potential_decay_factor must exceed 1, got {self.potential_decay_factor}"
            )
        if self.cauchy_windows < 1:
            raise ValueError(f"cauchy_windows must be >= 1, got {self.cauchy_windows}")


@dataclass(frozen=True)
class MorawetzJob:
    """Optional interaction-Morawetz pass over the run's snapshots."""

    R: tuple = (4.0, 8.0)
    s: tuple = (0.0,)
    delta: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "R", tuple(float(r) for r in self.R))
        object.__setattr__(self, "s", tuple(float(v) for v in self.s))
        if not self.R:
            raise ValueError("morawetz.R must list at least one radius")
        if any(r <= 0 for r in self.R):
            raise ValueError(f"morawetz.R must be positive, got {self.R}")
        if self.delta <= 0:
            raise ValueError(f"morawetz.delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainConfig = DomainConfig()
    initial: InitialSpec = InitialSpec()
    step: StepConfig = StepConfig()
    detectors: DetectorConfig = DetectorConfig()
    morawetz: Optional[MorawetzJob] = None
    t_max: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.t_max <= 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")


def _build(cls, table, section):
    """Construct a config dataclass from a TOML table, rejecting unknown keys."""
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValueError(f"unknown keys in [{section}]: {', '.join(unknown)}")
    return cls(**table)


_SECTIONS = {
    "domain": DomainConfig,
    "initial": InitialSpec,
    "step": StepConfig,
    "detectors": DetectorConfig,
    "morawetz": MorawetzJob,
}


def parse_config(text):
    """Parse TOML text into an ExperimentConfig (strict: unknown keys fail)."""
    raw = tomllib.loads(text)
    unknown = sorted(set(raw) - set(_SECTIONS) - {"t_max", "seed"})
    if unknown:
        raise ValueError(f"unknown top-level config keys: {', '.join(unknown)}")
    parts = {}
    for name, cls in _SECTIONS.items():
        table = raw.get(name)
        if table is None:
            continue
        if not isinstance(table, dict):
            raise ValueError(f"[{name}] must be a table")
        parts[name] = _build(cls, table, name)
    return ExperimentConfig(
        t_max=float(raw.get("t_max", 20.0)),
        seed=int(raw.get("seed", 0)),
        **parts,
    )


def load_config(path):
    with open(path, "rb") as fh:
        return parse_config(fh.read().decode("utf-8"))


def _fmt(value):
    if isinstance(value, bool):  # before int: bool is an int subclass
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)  # shortest exact round trip
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, tuple):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {type(value).__name__} to TOML")


def canonical_toml(cfg):
    """Serialize with fixed key order and all defaults materialized.

    Floats print via repr (shortest exact form), so parse -> serialize is
    byte-stable: the canonical form of a config is unique.
    """
    lines = [f"t_max = {_fmt(float(cfg.t_max))}", f"seed = {cfg.seed}"]
    for name in _SECTIONS:
        obj = getattr(cfg, name)
        if obj is None:
            continue
        lines.append("")
        lines.append(f"[{name}]")
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if value is None:  # optional key: absent means unset
                continue
            lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg):
    """sha256 hex digest of the canonical serialization."""
    return hashlib.sha256(canonical_toml(cfg).encode("utf-8")).hexdigest()
