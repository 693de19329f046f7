"""Spectral-efficiency traces and the PRB capacity conversion."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from hybrid_slicing.samples import DimensionError, stream_rng
from hybrid_slicing.traffic.generator import TraceFormatError

logger = logging.getLogger(__name__)

N_SYM = 168
DEFAULT_ETA_MAX = 7.4
CHANNEL_STREAM = 1
SE_COLUMNS = ("ue_id", "k", "t", "eta")

# 4-bit CQI table, efficiency in bits per symbol
CQI_EFFICIENCY = np.array(
    [
        0.1523, 0.3770, 0.8770, 1.4766, 1.9141,
        2.4063, 2.7305, 3.3223, 3.9023, 4.5234,
        5.1152, 5.5547, 6.2266, 6.9141, 7.4063,
    ]
)


class MobilityProfile(Enum):
    """Mobility classes of the synthetic channel."""

    PEDESTRIAN = "pedestrian"
    URBAN = "urban"
    VEHICULAR = "vehicular"


@dataclass(frozen=True)
class ProfileParams:
    """Log-AR(1) parameters of one mobility class.

    Attributes:
        mean: median spectral efficiency, exp of the log-process mean
        sigma: stationary standard deviation of log(eta)
        half_life: slots after which the log-correlation drops to one half
    """

    mean: float
    sigma: float
    half_life: float

    def __post_init__(self) -> None:
        if self.mean <= 0:
            raise ValueError(f"profile mean must be positive, got {self.mean}")
        if self.sigma < 0:
            raise ValueError(f"profile sigma must be nonnegative, got {self.sigma}")
        if self.half_life <= 0:
            raise ValueError(f"profile half-life must be positive, got {self.half_life}")

    @property
    def rho(self) -> float:
        """Lag-1 autocorrelation of the log-process."""
        return float(0.5 ** (1.0 / self.half_life))


PROFILES: dict[MobilityProfile, ProfileParams] = {
    MobilityProfile.PEDESTRIAN: ProfileParams(mean=4.0, sigma=0.25, half_life=20.0),
    MobilityProfile.URBAN: ProfileParams(mean=2.5, sigma=0.45, half_life=6.0),
    MobilityProfile.VEHICULAR: ProfileParams(mean=3.0, sigma=0.6, half_life=2.0),
}


@dataclass(frozen=True)
class PrbCapacity:
    """Bits a PRB carries in one slot."""

    n_sym: int = N_SYM

    def __post_init__(self) -> None:
        if self.n_sym != N_SYM:
            raise ValueError(f"a PRB carries {N_SYM} symbols per slot, got {self.n_sym}")

    def bits_per_prb(self, eta: float | np.ndarray) -> float | np.ndarray:
        return bits_per_prb(eta)


def bits_per_prb(eta: float | np.ndarray) -> float | np.ndarray:
    """Pre-ceiling bits of one PRB at spectral efficiency ``eta``: 168 * eta."""
    values = np.asarray(eta, dtype=float)
    if values.size and not np.all(values > 0):
        raise ValueError(f"spectral efficiency must be positive, got {eta}")
    result = N_SYM * values
    return float(result) if result.ndim == 0 else result


@dataclass(frozen=True)
class SeTrace:
    """Spectral efficiency of every UE, shape (U, K, T).

    ``profiles`` names the mobility class of each UE; trace files loaded from
    disk carry ``None``.
    """

    values: np.ndarray
    profiles: tuple[MobilityProfile | None, ...] = field(default=())
    eta_max: float = DEFAULT_ETA_MAX

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 3:
            raise DimensionError(f"SE trace must be (U, K, T), got shape {values.shape}")
        if values.size and not (np.all(values > 0) and np.all(values <= self.eta_max)):
            raise ValueError(f"spectral efficiency must lie in (0, {self.eta_max}]")
        profiles = self.profiles or (None,) * values.shape[0]
        if len(profiles) != values.shape[0]:
            raise DimensionError(f"{len(profiles)} profiles for {values.shape[0]} UEs")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "profiles", tuple(profiles))

    @property
    def ue_count(self) -> int:
        return int(self.values.shape[0])

    @property
    def samples(self) -> int:
        return int(self.values.shape[1])

    @property
    def horizon(self) -> int:
        return int(self.values.shape[2])


def resolve_profiles(profile: str | MobilityProfile, ue_count: int) -> list[MobilityProfile]:
    """Per-UE profiles; ``mixed`` cycles through the three classes."""
    if profile == "mixed":
        cycle = list(MobilityProfile)
        return [cycle[i % len(cycle)] for i in range(ue_count)]
    return [MobilityProfile(profile)] * ue_count


def synthesize_se(
    profile: str | MobilityProfile | Sequence[MobilityProfile],
    ue_count: int,
    samples: int,
    horizon: int,
    seed: int,
    eta_max: float = DEFAULT_ETA_MAX,
    ue_offset: int = 0,
    params: dict[MobilityProfile, ProfileParams] | None = None,
) -> SeTrace:
    """Stationary log-AR(1) SE traces clipped into (0, eta_max].

    Each (UE, k) row starts from the stationary law, so there is no burn-in.

    Args:
        profile: one profile for every UE, ``"mixed"``, or a list with one per UE
        ue_count: number of UEs
        samples: K
        horizon: T in slots
        seed: master seed; streams are keyed on the global UE index
        eta_max: upper clip
        ue_offset: global index of the first UE
        params: overrides of the built-in profile table
    """
    table = PROFILES if params is None else {**PROFILES, **params}
    if isinstance(profile, (str, MobilityProfile)):
        per_ue = resolve_profiles(profile, ue_count)
    else:
        per_ue = list(profile)
    if len(per_ue) != ue_count:
        raise DimensionError(f"got {len(per_ue)} profiles for {ue_count} UEs")

    values = np.empty((ue_count, samples, horizon))
    for ue, prof in enumerate(per_ue):
        p = table[prof]
        rho = p.rho
        innovation = p.sigma * np.sqrt(1.0 - rho**2)
        for k in range(samples):
            rng = stream_rng(seed, CHANNEL_STREAM, ue_offset + ue, k)
            noise = rng.standard_normal(horizon)
            log_dev = np.empty(horizon)
            log_dev[0] = p.sigma * noise[0]
            for t in range(1, horizon):
                log_dev[t] = rho * log_dev[t - 1] + innovation * noise[t]
            values[ue, k] = np.minimum(p.mean * np.exp(log_dev), eta_max)
    return SeTrace(values, tuple(per_ue), eta_max)


def quantize_cqi(eta: np.ndarray | float, eta_max: float = DEFAULT_ETA_MAX) -> np.ndarray:
    """Snap SE down to the CQI table; values below the first entry floor at it."""
    values = np.asarray(eta, dtype=float)
    idx = np.searchsorted(CQI_EFFICIENCY, values, side="right") - 1
    snapped = CQI_EFFICIENCY[np.clip(idx, 0, CQI_EFFICIENCY.size - 1)]
    return np.minimum(snapped, eta_max)


def load_se_traces(
    path: str | Path,
    ue_count: int | None = None,
    samples: int | None = None,
    horizon: int | None = None,
    eta_max: float = DEFAULT_ETA_MAX,
) -> SeTrace:
    """Read a dense ``ue_id,k,t,eta`` file.

    Every cell of the grid must be present; a missing one raises DimensionError.
    """
    frame = pd.read_csv(path)
    missing = [c for c in SE_COLUMNS if c not in frame.columns]
    if missing:
        raise TraceFormatError(f"{path}: missing columns {missing}")
    if frame.duplicated(subset=["ue_id", "k", "t"]).any():
        raise TraceFormatError(f"{path}: duplicate (ue_id, k, t) rows")
    negative = frame[["ue_id", "k", "t"]].lt(0).any(axis=1)
    if negative.any():
        row = frame[negative].iloc[0]
        raise DimensionError(f"{path}: negative index at ue_id={row['ue_id']}, k={row['k']}, t={row['t']}")

    etas = frame["eta"].to_numpy(dtype=float)
    bad = ~((etas > 0) & (etas <= eta_max))
    if bad.any():
        row = frame[bad].iloc[0]
        raise ValueError(
            f"{path}: eta={row['eta']} at ue={row['ue_id']}, k={row['k']}, t={row['t']} "
            f"outside (0, {eta_max}]"
        )

    dims = []
    for column, given in zip(("ue_id", "k", "t"), (ue_count, samples, horizon)):
        inferred = int(frame[column].max()) + 1 if len(frame) else 0
        if given is not None and inferred > given:
            raise DimensionError(f"{path}: {column} index {inferred - 1} outside 0..{given - 1}")
        dims.append(inferred if given is None else given)

    values = np.full(tuple(dims), np.nan)
    values[frame["ue_id"].to_numpy(), frame["k"].to_numpy(), frame["t"].to_numpy()] = etas
    holes = np.argwhere(np.isnan(values))
    if holes.size:
        ue, k, t = holes[0]
        raise DimensionError(
            f"{path}: {len(holes)} missing cells, first at ue_id={ue}, k={k}, t={t}"
        )
    return SeTrace(values, eta_max=eta_max)


def write_se_csv(trace: SeTrace, path: str | Path) -> Path:
    """Write every cell of a trace as ``ue_id,k,t,eta`` rows."""
    ue, k, t = np.indices(trace.values.shape).reshape(3, -1)
    frame = pd.DataFrame(
        {"ue_id": ue, "k": k, "t": t, "eta": trace.values.reshape(-1)},
        columns=list(SE_COLUMNS),
    )
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format="%.17g")
    logger.info(f"Wrote {len(frame)} SE rows to {out}")
    return out
