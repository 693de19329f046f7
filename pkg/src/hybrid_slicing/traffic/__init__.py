"""Bursty traffic generation."""

from hybrid_slicing.traffic.generator import (
    ArrivalTrace,
    ParetoSpec,
    TailRegime,
    TraceFormatError,
    TrafficSpec,
    generate_arrivals,
    hill_estimator,
    read_arrivals_csv,
    sample_pareto,
    write_arrivals_csv,
)

__all__ = [
    "ArrivalTrace",
    "ParetoSpec",
    "TailRegime",
    "TraceFormatError",
    "TrafficSpec",
    "generate_arrivals",
    "hill_estimator",
    "read_arrivals_csv",
    "sample_pareto",
    "write_arrivals_csv",
]
