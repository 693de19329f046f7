"""Multi-seed experiment: traces, three-way optimization, report files."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from hybrid_slicing.optimizer.experiments import burstiness_sweep, compare_strategies, slice_count_sweep
from hybrid_slicing.runner.config import ScenarioConfig, dump_resolved, load_config
from hybrid_slicing.runner.ledger import RunLedger
from hybrid_slicing.runner.scenario import build_samples, burstiness_factory, slice_count_factory

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.csv"
PER_SEED_FILE = "per_seed.csv"
RESOLVED_CONFIG_FILE = "resolved_config.yaml"


@dataclass(frozen=True)
class ExperimentResult:
    summary: pd.DataFrame
    per_seed: pd.DataFrame
    summary_path: Path
    per_seed_path: Path
    config_path: Path


def _as_config(config: ScenarioConfig | str | Path) -> ScenarioConfig:
    return config if isinstance(config, ScenarioConfig) else load_config(config)


def run_experiment(config: ScenarioConfig | str | Path, out_dir: str | Path) -> ExperimentResult:
    """Optimise all three modes on every seed of the scenario and write the reports.

    Writes ``summary.csv`` (per-mode statistics and savings), ``per_seed.csv``
    and ``resolved_config.yaml`` into ``out_dir``.
    """
    scenario = _as_config(config)
    sla = scenario.sla_spec()
    spec = scenario.search_spec()
    ledger = RunLedger(len(scenario.slices))

    for seed in scenario.seeds:
        with ledger.track(seed) as ctx:
            samples = build_samples(scenario, seed)
            ctx.record(compare_strategies(samples, sla, spec))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = ledger.summary_frame()
    per_seed = ledger.per_seed_frame()
    summary_path = out / SUMMARY_FILE
    per_seed_path = out / PER_SEED_FILE
    config_path = out / RESOLVED_CONFIG_FILE
    summary.to_csv(summary_path, index=False)
    per_seed.to_csv(per_seed_path, index=False)
    config_path.write_text(dump_resolved(scenario))
    logger.info(f"Wrote {summary_path}, {per_seed_path} and {config_path}")

    return ExperimentResult(summary, per_seed, summary_path, per_seed_path, config_path)


def run_sweep(
    config: ScenarioConfig | str | Path,
    kind: str,
    values: list[float],
    seed: int | None = None,
) -> pd.DataFrame:
    """Burstiness (``alpha``) or slice-count (``slices``) sweep on one seed.

    Defaults to the first seed of the scenario.
    """
    scenario = _as_config(config)
    seed = scenario.seeds[0] if seed is None else seed
    spec = scenario.search_spec()
    if kind == "alpha":
        return burstiness_sweep(values, burstiness_factory(scenario, seed), spec)
    if kind == "slices":
        return slice_count_sweep([int(v) for v in values], slice_count_factory(scenario, seed), spec)
    raise ValueError(f"unknown sweep kind {kind!r}, expected 'alpha' or 'slices'")
