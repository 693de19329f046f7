"""Three-way strategy comparison and parameter sweeps."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import pandas as pd

from hybrid_slicing.mip.builder import FormulationKind
from hybrid_slicing.optimizer.search import FeasibilityOracle, OptResult, SearchSpec, minimize_allocation
from hybrid_slicing.queueing.simulator import SlaSpec
from hybrid_slicing.samples import SampleSet

logger = logging.getLogger(__name__)

ALPHA_RANGE = (1.0, 2.5)
MODE_ORDER = (FormulationKind.HYRA, FormulationKind.DEDICATED_ONLY, FormulationKind.SHARED_ONLY)

SampleFactory = Callable[[float], tuple[SampleSet, SlaSpec]]


def savings(hyra: float, dedicated: float, shared: float) -> float:
    """``1 - hyra / mean(dedicated, shared)``; 0 when both baselines are 0."""
    baseline = 0.5 * (dedicated + shared)
    if any(math.isnan(v) for v in (hyra, dedicated, shared)):
        return math.nan
    if baseline == 0:
        return 0.0
    return 1.0 - hyra / baseline


@dataclass(frozen=True)
class Comparison:
    """Optima of the three strategies on one sample set."""

    results: dict[FormulationKind, OptResult]
    slice_count: int

    def __getitem__(self, mode: FormulationKind) -> OptResult:
        return self.results[mode]

    @property
    def savings(self) -> float:
        """HyRA savings on relaxed totals."""
        return savings(
            self.results[FormulationKind.HYRA].relaxed_total,
            self.results[FormulationKind.DEDICATED_ONLY].relaxed_total,
            self.results[FormulationKind.SHARED_ONLY].relaxed_total,
        )

    @property
    def integer_savings(self) -> float:
        return savings(
            self.results[FormulationKind.HYRA].total_prbs,
            self.results[FormulationKind.DEDICATED_ONLY].total_prbs,
            self.results[FormulationKind.SHARED_ONLY].total_prbs,
        )

    def to_frame(self) -> pd.DataFrame:
        """One row per mode: ``mode,x_ded_1..S,x_sh,total,relaxed_total,feasible,evals``."""
        rows = []
        for mode in MODE_ORDER:
            result = self.results[mode]
            vector = (
                result.best.as_vector().tolist()
                if result.best is not None
                else [math.nan] * (self.slice_count + 1)
            )
            row: dict[str, object] = {"mode": mode.value}
            for s in range(self.slice_count):
                row[f"x_ded_{s + 1}"] = vector[s]
            row["x_sh"] = vector[-1]
            row["total"] = result.total_prbs
            row["relaxed_total"] = result.relaxed_total
            row["feasible"] = result.feasible
            row["evals"] = result.evaluations
            rows.append(row)
        return pd.DataFrame(rows)


def compare_strategies(samples: SampleSet, sla: SlaSpec, spec: SearchSpec) -> Comparison:
    """Optimise dedicated-only, shared-only and HyRA on the same samples.

    All three share one feasibility cache (common random numbers), and the
    HyRA search starts from both baseline optima, which are HyRA points too.
    """
    oracle = FeasibilityOracle(samples, sla)
    dedicated = minimize_allocation(spec.with_mode(FormulationKind.DEDICATED_ONLY), samples, sla, oracle=oracle)
    shared = minimize_allocation(spec.with_mode(FormulationKind.SHARED_ONLY), samples, sla, oracle=oracle)
    hyra = minimize_allocation(
        spec.with_mode(FormulationKind.HYRA),
        samples,
        sla,
        warm_start=(dedicated.best_relaxed, shared.best_relaxed),
        oracle=oracle,
    )
    comparison = Comparison(
        {FormulationKind.HYRA: hyra, FormulationKind.DEDICATED_ONLY: dedicated, FormulationKind.SHARED_ONLY: shared},
        oracle.slice_count,
    )
    logger.info(
        f"hyra {hyra.relaxed_total:g}, dedicated {dedicated.relaxed_total:g}, "
        f"shared {shared.relaxed_total:g} PRBs; savings {comparison.savings:.1%}"
    )
    return comparison


def sweep(
    values: Iterable[float],
    factory: SampleFactory,
    spec: SearchSpec,
    label: str = "value",
) -> pd.DataFrame:
    """Run ``compare_strategies`` on ``factory(value)`` for each value.

    Returns one row per value with the relaxed totals of each mode and the
    savings.
    """
    rows = []
    for value in values:
        samples, sla = factory(value)
        comparison = compare_strategies(samples, sla, spec)
        row: dict[str, object] = {label: value}
        for mode in MODE_ORDER:
            row[mode.value] = comparison[mode].relaxed_total
        row["savings"] = comparison.savings
        rows.append(row)
    return pd.DataFrame(rows)


def burstiness_sweep(alphas: Sequence[float], factory: SampleFactory, spec: SearchSpec) -> pd.DataFrame:
    """Savings as a function of the Pareto tail index at a fixed mean load."""
    for alpha in alphas:
        if not ALPHA_RANGE[0] < alpha <= ALPHA_RANGE[1]:
            raise ValueError(f"alpha must lie in (1, 2.5], got {alpha}")
    return sweep(alphas, factory, spec, label="alpha")


def slice_count_sweep(counts: Sequence[int], factory: SampleFactory, spec: SearchSpec) -> pd.DataFrame:
    """Savings as the number of slices grows."""
    for count in counts:
        if count < 1:
            raise ValueError(f"slice count must be at least 1, got {count}")
    return sweep(counts, factory, spec, label="slices")
