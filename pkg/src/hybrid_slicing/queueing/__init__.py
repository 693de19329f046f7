"""Queue simulation and SLA evaluation."""

from hybrid_slicing.queueing.simulator import (
    DelayReport,
    QueueState,
    SlaMode,
    SlaSpec,
    SlaVerdict,
    littles_law_delay,
    run_queues,
    simulate,
    sla_satisfied,
    step_queue,
)

__all__ = [
    "DelayReport",
    "QueueState",
    "SlaMode",
    "SlaSpec",
    "SlaVerdict",
    "littles_law_delay",
    "run_queues",
    "simulate",
    "sla_satisfied",
    "step_queue",
]
