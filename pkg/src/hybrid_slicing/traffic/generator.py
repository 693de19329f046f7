"""Heavy-tailed arrival traces: Pareto inter-arrivals and packet sizes binned into 1 ms slots."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from hybrid_slicing.samples import DimensionError, stream_rng

logger = logging.getLogger(__name__)

TRAFFIC_STREAM = 0
TRACE_COLUMNS = ("ue_id", "k", "t", "bits")


class TraceFormatError(ValueError):
    """A trace file does not follow the expected CSV layout."""


class TailRegime(Enum):
    """Burstiness regimes of the Pareto tail index."""

    INFINITE_MEAN = "infinite_mean"  # alpha <= 1
    HEAVY_TAILED = "heavy_tailed"  # 1 < alpha <= 2, infinite variance
    LIGHT_TAILED = "light_tailed"  # alpha > 2


def tail_regime(alpha: float) -> TailRegime:
    """Classify a tail index."""
    if alpha <= 1:
        return TailRegime.INFINITE_MEAN
    if alpha <= 2:
        return TailRegime.HEAVY_TAILED
    return TailRegime.LIGHT_TAILED


@dataclass(frozen=True)
class ParetoSpec:
    """Pareto law with tail index ``alpha`` and minimum value ``scale``."""

    alpha: float
    scale: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.alpha) or self.alpha <= 1:
            raise ValueError(
                f"Pareto alpha must exceed 1, got {self.alpha}: alpha <= 1 has an infinite mean"
            )
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise ValueError(f"Pareto scale must be positive, got {self.scale}")

    @property
    def regime(self) -> TailRegime:
        return tail_regime(self.alpha)

    @property
    def mean(self) -> float:
        return self.alpha * self.scale / (self.alpha - 1)


def solve_size_scale(target_load: float, inter_arrival: ParetoSpec, size_alpha: float) -> float:
    """Packet-size scale giving ``mean(size) / mean(inter_arrival) == target_load``.

    Args:
        target_load: mean offered load in bits per ms
        inter_arrival: inter-arrival law in ms
        size_alpha: tail index of the packet-size law
    """
    if target_load <= 0:
        raise ValueError(f"target load must be positive, got {target_load}")
    if size_alpha <= 1:
        raise ValueError(f"packet size alpha must exceed 1, got {size_alpha}")
    return target_load * inter_arrival.mean * (size_alpha - 1) / size_alpha


@dataclass(frozen=True)
class TrafficSpec:
    """Arrival process of one UE.

    When ``target_load`` is set, the packet-size scale is re-solved from the
    tail index so that the mean load matches it and ``packet_size.scale`` is
    only a placeholder.
    """

    inter_arrival: ParetoSpec
    packet_size: ParetoSpec
    target_load: float | None = None

    def __post_init__(self) -> None:
        if self.target_load is not None and self.target_load <= 0:
            raise ValueError(f"target load must be positive, got {self.target_load}")
        for name, law in (("inter-arrival", self.inter_arrival), ("packet size", self.packet_size)):
            if law.regime is TailRegime.LIGHT_TAILED:
                logger.warning(f"{name} alpha={law.alpha} is light-tailed (finite variance)")

    @property
    def size_law(self) -> ParetoSpec:
        """Packet-size law actually sampled."""
        if self.target_load is None:
            return self.packet_size
        scale = solve_size_scale(self.target_load, self.inter_arrival, self.packet_size.alpha)
        return ParetoSpec(alpha=self.packet_size.alpha, scale=scale)

    @property
    def mean_load(self) -> float:
        """Implied mean load in bits per ms."""
        return self.size_law.mean / self.inter_arrival.mean

    @classmethod
    def normalized(
        cls,
        alpha: float,
        target_load: float,
        inter_arrival_scale: float = 0.5,
        size_alpha: float | None = None,
    ) -> TrafficSpec:
        """Same tail index for gaps and sizes, scaled to a fixed mean load."""
        inter_arrival = ParetoSpec(alpha=alpha, scale=inter_arrival_scale)
        s_alpha = alpha if size_alpha is None else size_alpha
        scale = solve_size_scale(target_load, inter_arrival, s_alpha)
        return cls(inter_arrival, ParetoSpec(alpha=s_alpha, scale=scale), target_load)


@dataclass(frozen=True)
class ArrivalTrace:
    """Bits arriving per slot for every UE, shape (U, K, T)."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits)
        if bits.ndim != 3:
            raise DimensionError(f"arrival trace must be (U, K, T), got shape {bits.shape}")
        if bits.size and bits.min() < 0:
            raise ValueError("arrival trace entries must be nonnegative")
        object.__setattr__(self, "bits", bits.astype(np.int64, copy=False))

    @property
    def ue_count(self) -> int:
        return int(self.bits.shape[0])

    @property
    def samples(self) -> int:
        return int(self.bits.shape[1])

    @property
    def horizon(self) -> int:
        return int(self.bits.shape[2])

    def for_ue(self, ue: int) -> np.ndarray:
        """K x T block of one UE."""
        return self.bits[ue]


def sample_pareto(spec: ParetoSpec, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. Pareto values by inverse CDF, ``scale * U**(-1/alpha)``.

    ``U`` is taken from ``1 - rng.random(n)`` so it lies in (0, 1].
    """
    if n < 1:
        raise ValueError(f"sample count must be at least 1, got {n}")
    u = 1.0 - rng.random(n)
    return spec.scale * u ** (-1.0 / spec.alpha)


def generate_packets(
    spec: TrafficSpec, horizon: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Packet arrival instants in [0, horizon) and their integer sizes in bits.

    The first packet arrives one inter-arrival time after 0. Over a short
    horizon this counts more packets than ``horizon / mean gap``: gaps longer
    than the window are cut off by it, so heavy-tailed traffic runs above
    ``target_load`` (about 15% at alpha 1.5 over 20 slots) and the excess
    grows as alpha approaches 1.
    """
    gaps_law = spec.inter_arrival
    chunk = max(16, int(2 * horizon / gaps_law.mean) + 1)
    parts: list[np.ndarray] = []
    clock = 0.0
    while clock < horizon:
        instants = clock + np.cumsum(sample_pareto(gaps_law, rng, chunk))
        parts.append(instants)
        clock = float(instants[-1])
    times = np.concatenate(parts)
    times = times[times < horizon]
    if times.size == 0:
        return times, np.zeros(0, dtype=np.int64)
    sizes = np.ceil(sample_pareto(spec.size_law, rng, times.size)).astype(np.int64)
    return times, sizes


def bin_packets(times: np.ndarray, sizes: np.ndarray, horizon: int) -> np.ndarray:
    """Sum packet bits into slots; a packet at instant tau lands in slot floor(tau)."""
    slots = np.floor(times).astype(np.int64)
    binned = np.zeros(horizon, dtype=np.int64)
    np.add.at(binned, slots, sizes)
    return binned


def generate_arrivals(
    spec: TrafficSpec | Sequence[TrafficSpec],
    ue_count: int,
    samples: int,
    horizon: int,
    master_seed: int,
    ue_offset: int = 0,
) -> ArrivalTrace:
    """Generate K x T arrival traces for ``ue_count`` UEs.

    Args:
        spec: one spec shared by all UEs, or one per UE
        ue_count: number of UEs
        samples: K, independent samples per UE
        horizon: T, slots per sample
        master_seed: root seed; each (UE, k) block gets its own derived stream
        ue_offset: global index of the first UE, so that slices generated
            separately still draw disjoint streams
    """
    if samples < 1 or horizon < 1:
        raise ValueError(f"K and T must be at least 1, got K={samples}, T={horizon}")
    specs = [spec] * ue_count if isinstance(spec, TrafficSpec) else list(spec)
    if len(specs) != ue_count:
        raise DimensionError(f"got {len(specs)} traffic specs for {ue_count} UEs")

    bits = np.zeros((ue_count, samples, horizon), dtype=np.int64)
    for ue, ue_spec in enumerate(specs):
        for k in range(samples):
            rng = stream_rng(master_seed, TRAFFIC_STREAM, ue_offset + ue, k)
            times, sizes = generate_packets(ue_spec, horizon, rng)
            bits[ue, k] = bin_packets(times, sizes, horizon)
    return ArrivalTrace(bits)


def hill_estimator(samples: np.ndarray, k: int | None = None) -> float:
    """Tail-index estimate from the ``k`` largest order statistics.

    Defaults to the top 10% of the sample.
    """
    x = np.sort(np.asarray(samples, dtype=float))[::-1]
    n = x.size
    k = max(10, n // 10) if k is None else k
    if not 1 <= k < n:
        raise ValueError(f"need 1 <= k < n, got k={k}, n={n}")
    if x[k] <= 0:
        raise ValueError("Hill estimator needs positive samples")
    log_excess = np.log(x[:k]) - np.log(x[k])
    return float(1.0 / log_excess.mean())


def write_arrivals_csv(trace: ArrivalTrace, path: str | Path) -> Path:
    """Write the nonzero slots of a trace as ``ue_id,k,t,bits`` rows."""
    ue, k, t = np.nonzero(trace.bits)
    frame = pd.DataFrame(
        {"ue_id": ue, "k": k, "t": t, "bits": trace.bits[ue, k, t]},
        columns=list(TRACE_COLUMNS),
    )
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    logger.info(f"Wrote {len(frame)} arrival rows to {out}")
    return out


def read_arrivals_csv(
    path: str | Path,
    ue_count: int | None = None,
    samples: int | None = None,
    horizon: int | None = None,
) -> ArrivalTrace:
    """Read a sparse arrival trace; slots without a row hold 0 bits.

    Dimensions not given are inferred from the largest index present.
    """
    frame = pd.read_csv(path)
    missing = [c for c in TRACE_COLUMNS if c not in frame.columns]
    if missing:
        raise TraceFormatError(f"{path}: missing columns {missing}")
    if (frame["bits"] < 0).any():
        raise TraceFormatError(f"{path}: negative bit counts")
    negative = frame[["ue_id", "k", "t"]].lt(0).any(axis=1)
    if negative.any():
        row = frame[negative].iloc[0]
        raise DimensionError(f"{path}: negative index at ue_id={row['ue_id']}, k={row['k']}, t={row['t']}")

    dims = []
    for column, given in zip(("ue_id", "k", "t"), (ue_count, samples, horizon)):
        inferred = int(frame[column].max()) + 1 if len(frame) else 0
        if given is None:
            dims.append(inferred)
        elif inferred > given:
            raise DimensionError(f"{path}: {column} index {inferred - 1} outside 0..{given - 1}")
        else:
            dims.append(given)

    bits = np.zeros(tuple(dims), dtype=np.int64)
    np.add.at(
        bits,
        (frame["ue_id"].to_numpy(), frame["k"].to_numpy(), frame["t"].to_numpy()),
        frame["bits"].to_numpy(dtype=np.int64),
    )
    return ArrivalTrace(bits)
