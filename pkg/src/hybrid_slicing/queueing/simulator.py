"""Slot-level queue evolution, Little's-law delays and SLA checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from hybrid_slicing.channel.model import N_SYM
from hybrid_slicing.samples import DimensionError, SampleSet
from hybrid_slicing.scheduler.waterfilling import Allocation, GridSchedule, schedule_grid

logger = logging.getLogger(__name__)

SLA_TOL = 1e-9


class SlaMode(Enum):
    """How delay budgets are enforced."""

    PER_UE = "per_ue"
    SLICE_AGGREGATED = "slice_aggregated"


@dataclass(frozen=True)
class SlaSpec:
    """Delay budgets in slots (1 slot = 1 ms).

    Attributes:
        budgets: D_s, one per slice
        mode: per-UE rows or one averaged row per slice
        ue_budgets: optional D_{s,i} per UE, overriding the slice budget in
            per-UE mode
    """

    budgets: tuple[float, ...]
    mode: SlaMode = SlaMode.PER_UE
    ue_budgets: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        budgets = tuple(float(b) for b in self.budgets)
        if not budgets or min(budgets) <= 0:
            raise ValueError(f"delay budgets must be positive, got {budgets}")
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "mode", SlaMode(self.mode))
        if self.ue_budgets is not None:
            ue_budgets = tuple(float(b) for b in self.ue_budgets)
            if min(ue_budgets, default=1.0) <= 0:
                raise ValueError(f"per-UE delay budgets must be positive, got {ue_budgets}")
            object.__setattr__(self, "ue_budgets", ue_budgets)

    def ue_limits(self, slice_of: np.ndarray) -> np.ndarray:
        """D_{s,i} for each UE."""
        if self.ue_budgets is not None:
            if len(self.ue_budgets) != len(slice_of):
                raise DimensionError(
                    f"{len(self.ue_budgets)} per-UE budgets for {len(slice_of)} UEs"
                )
            return np.asarray(self.ue_budgets)
        if len(slice_of) and int(np.max(slice_of)) >= len(self.budgets):
            raise DimensionError(
                f"UE in slice {int(np.max(slice_of))} but only {len(self.budgets)} budgets"
            )
        return np.asarray(self.budgets)[slice_of]


@dataclass(frozen=True)
class QueueState:
    """Backlog and service of every UE.

    ``queue[..., 0]`` is the (empty) initial backlog, so ``queue`` has T + 1
    slots along its last axis and ``served`` has T.
    """

    queue: np.ndarray
    served: np.ndarray

    @property
    def final_backlog(self) -> np.ndarray:
        return self.queue[..., -1]


@dataclass(frozen=True)
class DelayReport:
    """Little's-law delays in slots.

    Attributes:
        per_sample: d_hat_i(k), shape (U, K)
        slice_of: slice of each UE
        idle: True where a sample saw no arrivals, shape (U, K)
    """

    per_sample: np.ndarray
    slice_of: np.ndarray
    idle: np.ndarray

    @property
    def mean(self) -> np.ndarray:
        """SAA delay per UE."""
        return self.per_sample.mean(axis=1)

    @property
    def per_slice(self) -> np.ndarray:
        """Average of the SAA delays of each slice's UEs; nan for empty slices."""
        n_slices = int(self.slice_of.max()) + 1 if self.slice_of.size else 0
        mean = self.mean
        return np.array(
            [mean[self.slice_of == s].mean() if np.any(self.slice_of == s) else np.nan
             for s in range(n_slices)]
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {"ue_id": np.arange(self.per_sample.shape[0]), "slice": self.slice_of, "d_mean": self.mean}
        )
        for k in range(self.per_sample.shape[1]):
            frame[f"d_{k}"] = self.per_sample[:, k]
        return frame

    def write_csv(self, path: str | Path) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(out, index=False, float_format="%.17g")
        logger.info(f"Wrote delay report to {out}")
        return out


@dataclass(frozen=True)
class SlaVerdict:
    """Outcome of an SLA check; one margin per constraint, budget minus delay."""

    satisfied: bool
    margins: np.ndarray
    mode: SlaMode

    @property
    def worst_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else float("inf")


def step_queue(
    queue: np.ndarray | float, arrivals: np.ndarray | float, capacity: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    """One work-conserving slot: serve ``min(Q + A, capacity)``.

    Returns:
        (next backlog, served bits)
    """
    q = np.asarray(queue, dtype=float)
    a = np.asarray(arrivals, dtype=float)
    c = np.asarray(capacity, dtype=float)
    if np.any(q < 0) or np.any(a < 0) or np.any(c < 0):
        raise ValueError("queue, arrivals and capacity must be nonnegative")
    served = np.minimum(q + a, c)
    return q + a - served, served


def littles_law_delay(queue: np.ndarray, arrivals: np.ndarray) -> np.ndarray:
    """``sum(Q) / sum(A)`` along the last axis; 0 where nothing arrived.

    ``queue`` holds the backlog at the start of each slot, so both arrays
    have T entries on the last axis.
    """
    q_sum = np.asarray(queue, dtype=float).sum(axis=-1)
    a_sum = np.asarray(arrivals, dtype=float).sum(axis=-1)
    safe = np.where(a_sum > 0, a_sum, 1.0)
    return np.where(a_sum > 0, q_sum / safe, 0.0)


def run_queues(arrivals: np.ndarray, capacity: np.ndarray) -> QueueState:
    """Evolve every queue from empty over T slots; both inputs (U, K, T)."""
    a = np.asarray(arrivals, dtype=float)
    if capacity.shape != a.shape:
        raise DimensionError(f"capacity {capacity.shape} and arrivals {a.shape} differ")
    horizon = a.shape[-1]
    queue = np.zeros((*a.shape[:-1], horizon + 1))
    served = np.zeros_like(a)
    for t in range(horizon):
        queue[..., t + 1], served[..., t] = step_queue(queue[..., t], a[..., t], capacity[..., t])
    return QueueState(queue=queue, served=served)


def simulate(
    allocation: Allocation,
    samples: SampleSet,
    schedule: GridSchedule | None = None,
) -> tuple[QueueState, DelayReport]:
    """Schedule every slot, run the queues and compute SAA delays.

    Args:
        allocation: outer-loop PRB allocation
        samples: arrivals, SE and slice membership
        schedule: a precomputed ``schedule_grid`` result for this allocation
    """
    if allocation.slice_count < samples.slice_count:
        raise DimensionError(
            f"allocation covers {allocation.slice_count} slices, samples use {samples.slice_count}"
        )
    if schedule is None:
        schedule = schedule_grid(allocation, samples.etas, samples.slice_of)
    capacity = N_SYM * samples.etas * schedule.y_total
    state = run_queues(samples.arrivals, capacity)

    idle = samples.arrivals.sum(axis=-1) == 0
    if idle.any():
        logger.debug(f"{int(idle.sum())} (UE, sample) pairs without arrivals count as zero delay")
    per_sample = littles_law_delay(state.queue[..., :-1], samples.arrivals)
    return state, DelayReport(per_sample=per_sample, slice_of=samples.slice_of, idle=idle)


def sla_satisfied(report: DelayReport, sla: SlaSpec) -> SlaVerdict:
    """Check delays against the budgets; the boundary counts as satisfied."""
    if sla.mode is SlaMode.PER_UE:
        margins = sla.ue_limits(report.slice_of) - report.mean
    else:
        per_slice = report.per_slice
        present = ~np.isnan(per_slice)
        if len(sla.budgets) < per_slice.size:
            raise DimensionError(f"{per_slice.size} slices but only {len(sla.budgets)} budgets")
        margins = np.asarray(sla.budgets)[: per_slice.size][present] - per_slice[present]
    return SlaVerdict(
        satisfied=bool(np.all(margins >= -SLA_TOL)),
        margins=margins,
        mode=sla.mode,
    )

