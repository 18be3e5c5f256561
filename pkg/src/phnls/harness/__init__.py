"""Experiment harness: configs, dichotomy runs, detectors, verification, CLI."""

from .config import (
    DetectorConfig,
    ExperimentConfig,
    InitialSpec,
    MorawetzJob,
    canonical_toml,
    config_hash,
    load_config,
    parse_config,
)
from .detectors import (
    cauchy_deltas,
    criterion_norm,
    detect_blowup,
    detect_scatter_proxy,
)
from .runner import DichotomyReport, StoredRun, build_initial, load_run, run
from .checks import Context, verify

__all__ = [
    "Context",
    "DetectorConfig",
    "DichotomyReport",
    "ExperimentConfig",
    "InitialSpec",
    "MorawetzJob",
    "StoredRun",
    "build_initial",
    "canonical_toml",
    "cauchy_deltas",
    "config_hash",
    "criterion_norm",
    "detect_blowup",
    "detect_scatter_proxy",
    "load_config",
    "load_run",
    "parse_config",
    "run",
    "verify",
]
