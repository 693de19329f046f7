"""Inner-loop scheduler: two-stage water-filling and KKT checks."""

from hybrid_slicing.scheduler.waterfilling import (
    Allocation,
    DualRecoveryError,
    GridSchedule,
    KktReport,
    SlotSchedule,
    dedicated_level,
    kkt_residuals,
    max_throughput_slot,
    round_robin_slot,
    schedule_grid,
    schedule_slot,
    shared_level,
    slot_utility,
    water_height,
)

__all__ = [
    "Allocation",
    "DualRecoveryError",
    "GridSchedule",
    "KktReport",
    "SlotSchedule",
    "dedicated_level",
    "kkt_residuals",
    "max_throughput_slot",
    "round_robin_slot",
    "schedule_grid",
    "schedule_slot",
    "shared_level",
    "slot_utility",
    "water_height",
]
