"""Sample sets shared by the simulator, the MIP builder and the outer search."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DimensionError(ValueError):
    """Arrays that should describe the same (UE, sample, slot) grid disagree."""


def stream_rng(master_seed: int, tag: int, ue: int, k: int) -> np.random.Generator:
    """Independent generator for one (stream, UE, sample) block.

    The spawn key pins the stream to its coordinates, so blocks can be drawn
    in any order (or in parallel) and still reproduce bit for bit.
    """
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(tag, ue, k)))


@dataclass(frozen=True)
class SampleSet:
    """Arrival and spectral-efficiency traces for every UE, sample and slot.

    Attributes:
        arrivals: bits arriving per slot, shape (U, K, T), integer valued
        etas: spectral efficiency in bits per symbol, shape (U, K, T)
        slice_of: slice index of each UE, shape (U,)
    """

    arrivals: np.ndarray
    etas: np.ndarray
    slice_of: np.ndarray

    def __post_init__(self) -> None:
        arrivals = np.asarray(self.arrivals)
        etas = np.asarray(self.etas, dtype=float)
        slice_of = np.asarray(self.slice_of, dtype=np.int64)
        if arrivals.ndim != 3 or etas.shape != arrivals.shape:
            raise DimensionError(
                f"arrivals {arrivals.shape} and etas {etas.shape} must share one (U, K, T) shape"
            )
        if slice_of.shape != (arrivals.shape[0],):
            raise DimensionError(
                f"slice_of has shape {slice_of.shape}, expected ({arrivals.shape[0]},)"
            )
        if arrivals.size and arrivals.min() < 0:
            raise ValueError("arrivals must be nonnegative")
        if etas.size and not np.all(etas > 0):
            raise ValueError("spectral efficiencies must be strictly positive")
        if slice_of.size and slice_of.min() < 0:
            raise ValueError("slice indices must be nonnegative")
        object.__setattr__(self, "arrivals", arrivals)
        object.__setattr__(self, "etas", etas)
        object.__setattr__(self, "slice_of", slice_of)

    @property
    def ue_count(self) -> int:
        return int(self.arrivals.shape[0])

    @property
    def samples(self) -> int:
        return int(self.arrivals.shape[1])

    @property
    def horizon(self) -> int:
        return int(self.arrivals.shape[2])

    @property
    def slice_count(self) -> int:
        return int(self.slice_of.max()) + 1 if self.slice_of.size else 0

    def members(self, s: int) -> np.ndarray:
        """Indices of the UEs in slice ``s``."""
        return np.flatnonzero(self.slice_of == s)
