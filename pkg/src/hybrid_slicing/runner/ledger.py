"""Per-seed optimization records and their aggregation."""

from __future__ import annotations

import logging
import math
import time
from collections.abc import Generator
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from hybrid_slicing.mip.builder import FormulationKind
from hybrid_slicing.optimizer.experiments import MODE_ORDER, Comparison

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("mode", "runs", "feasible", "mean", "median", "q25", "q75", "iqr", "relaxed_mean")


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one mode on one seed."""

    seed: int
    mode: FormulationKind
    x_ded: tuple[float, ...]
    x_sh: float
    total: float
    relaxed_total: float
    feasible: bool
    evaluations: int
    pruned: int
    savings: float


@dataclass
class SeedContext:
    """Collects the comparison of one seed while timing it."""

    ledger: RunLedger
    seed: int
    start_time: float = field(default_factory=time.perf_counter)
    comparison: Comparison | None = None

    def record(self, comparison: Comparison) -> None:
        self.comparison = comparison

    @property
    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start_time) * 1000


class RunLedger:
    """Accumulate RunRecords across seeds and summarise them per mode.

    Wall-clock times are logged, never stored, so the tables depend on the
    inputs alone.
    """

    def __init__(self, slice_count: int) -> None:
        self.slice_count = slice_count
        self._records: list[RunRecord] = []

    @property
    def records(self) -> list[RunRecord]:
        return list(self._records)

    @contextmanager
    def track(self, seed: int) -> Generator[SeedContext, None, None]:
        """Time one seed; whatever comparison it records is added on exit."""
        ctx = SeedContext(ledger=self, seed=seed)
        try:
            yield ctx
        finally:
            if ctx.comparison is not None:
                self.add(seed, ctx.comparison)
                logger.debug(f"seed {seed} done in {ctx.elapsed_ms:.0f} ms")

    def add(self, seed: int, comparison: Comparison) -> None:
        """Record the three modes of one seed."""
        saving = comparison.savings
        for mode in MODE_ORDER:
            result = comparison[mode]
            if result.best is None:
                x_ded: tuple[float, ...] = (math.nan,) * self.slice_count
                x_sh = math.nan
            else:
                x_ded, x_sh = result.best.x_ded, result.best.x_sh
            self._records.append(
                RunRecord(
                    seed=seed,
                    mode=mode,
                    x_ded=x_ded,
                    x_sh=x_sh,
                    total=result.total_prbs,
                    relaxed_total=result.relaxed_total,
                    feasible=result.feasible,
                    evaluations=result.evaluations,
                    pruned=result.pruned,
                    savings=saving,
                )
            )

    def per_seed_frame(self) -> pd.DataFrame:
        """One row per (seed, mode)."""
        rows = []
        for record in self._records:
            row: dict[str, object] = {"seed": record.seed, "mode": record.mode.value}
            for s, value in enumerate(record.x_ded):
                row[f"x_ded_{s + 1}"] = value
            row.update(
                x_sh=record.x_sh,
                total=record.total,
                relaxed_total=record.relaxed_total,
                feasible=record.feasible,
                evals=record.evaluations,
                pruned=record.pruned,
                savings=record.savings,
            )
            rows.append(row)
        return pd.DataFrame(rows)

    def summary_frame(self) -> pd.DataFrame:
        """Mean, median and IQR of total PRBs per mode, plus a savings row.

        Statistics cover feasible runs only; the savings row covers seeds on
        which all three modes were feasible.
        """
        rows = []
        for mode in MODE_ORDER:
            records = [r for r in self._records if r.mode is mode]
            feasible = [r for r in records if r.feasible]
            row = _stats(mode.value, [r.total for r in feasible], len(records), len(feasible))
            row["relaxed_mean"] = float(np.mean([r.relaxed_total for r in feasible])) if feasible else math.nan
            rows.append(row)

        per_seed = {r.seed: r.savings for r in self._records}
        savings = [v for v in per_seed.values() if not math.isnan(v)]
        row = _stats("savings", savings, len(per_seed), len(savings))
        row["relaxed_mean"] = row["mean"]
        rows.append(row)
        return pd.DataFrame(rows, columns=list(SUMMARY_COLUMNS))

    def get_mode_breakdown(self) -> dict[str, dict[str, float]]:
        """Total simulations and pruned points per mode."""
        breakdown: dict[str, dict[str, float]] = {}
        for record in self._records:
            entry = breakdown.setdefault(record.mode.value, {"runs": 0, "evaluations": 0, "pruned": 0})
            entry["runs"] += 1
            entry["evaluations"] += record.evaluations
            entry["pruned"] += record.pruned
        return breakdown


def _stats(label: str, values: list[float], runs: int, feasible: int) -> dict[str, object]:
    if not values:
        return {"mode": label, "runs": runs, "feasible": feasible, "mean": math.nan,
                "median": math.nan, "q25": math.nan, "q75": math.nan, "iqr": math.nan}
    q25, median, q75 = np.percentile(values, [25, 50, 75])
    return {
        "mode": label,
        "runs": runs,
        "feasible": feasible,
        "mean": float(np.mean(values)),
        "median": float(median),
        "q25": float(q25),
        "q75": float(q75),
        "iqr": float(q75 - q25),
    }
