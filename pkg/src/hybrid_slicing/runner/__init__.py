"""Scenario configuration, experiment orchestration and verification suites."""

from hybrid_slicing.runner.config import (
    ConfigError,
    ScenarioConfig,
    SliceConfig,
    TrafficConfig,
    apply_overrides,
    dump_resolved,
    load_config,
    parse_config,
)
from hybrid_slicing.runner.experiment import ExperimentResult, run_experiment, run_sweep
from hybrid_slicing.runner.ledger import RunLedger, RunRecord
from hybrid_slicing.runner.scenario import build_samples, with_alpha, with_slice_count
from hybrid_slicing.runner.verify import SUITES, SuiteResult, run_suites

__all__ = [
    "SUITES",
    "ConfigError",
    "ExperimentResult",
    "RunLedger",
    "RunRecord",
    "ScenarioConfig",
    "SliceConfig",
    "SuiteResult",
    "TrafficConfig",
    "apply_overrides",
    "build_samples",
    "dump_resolved",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_suites",
    "run_sweep",
    "with_alpha",
    "with_slice_count",
]
