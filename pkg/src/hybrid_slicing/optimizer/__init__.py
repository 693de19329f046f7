"""Outer-loop search and strategy comparisons."""

from hybrid_slicing.optimizer.experiments import (
    Comparison,
    burstiness_sweep,
    compare_strategies,
    savings,
    slice_count_sweep,
    sweep,
)
from hybrid_slicing.optimizer.search import (
    FeasibilityOracle,
    OptResult,
    SearchSpec,
    bisect_shared_total,
    free_components,
    minimize_allocation,
)

__all__ = [
    "Comparison",
    "FeasibilityOracle",
    "OptResult",
    "SearchSpec",
    "bisect_shared_total",
    "burstiness_sweep",
    "compare_strategies",
    "free_components",
    "minimize_allocation",
    "savings",
    "slice_count_sweep",
    "sweep",
]
