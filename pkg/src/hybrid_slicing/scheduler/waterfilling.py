"""Two-stage water-filling for the per-slot log-utility problem.

Stage one levels each slice's dedicated pool over its own UEs; stage two
levels the shared pool over every UE on top of the dedicated allocation.
Everything here works on arrays shaped (U, K, T) so a whole sample set is
scheduled in one pass; ``schedule_slot`` is the K = T = 1 case.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

DUAL_CLIP_TOL = 1e-12


class DualRecoveryError(ArithmeticError):
    """A recovered multiplier came out negative beyond rounding noise."""


@dataclass(frozen=True)
class Allocation:
    """Outer-loop decision: dedicated PRBs per slice plus one shared pool."""

    x_ded: tuple[float, ...]
    x_sh: float

    def __post_init__(self) -> None:
        x_ded = tuple(float(v) for v in self.x_ded)
        values = (*x_ded, float(self.x_sh))
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise ValueError(f"allocation components must be finite and nonnegative, got {values}")
        object.__setattr__(self, "x_ded", x_ded)
        object.__setattr__(self, "x_sh", float(self.x_sh))

    @classmethod
    def from_vector(cls, vector: Sequence[float] | np.ndarray) -> Allocation:
        """Build from ``[x_ded_0, ..., x_ded_{S-1}, x_sh]``."""
        values = [float(v) for v in vector]
        if not values:
            raise ValueError("allocation vector needs at least the shared component")
        return cls(tuple(values[:-1]), values[-1])

    @classmethod
    def zeros(cls, slice_count: int) -> Allocation:
        return cls((0.0,) * slice_count, 0.0)

    def as_vector(self) -> np.ndarray:
        return np.array([*self.x_ded, self.x_sh])

    @property
    def slice_count(self) -> int:
        return len(self.x_ded)

    @property
    def total(self) -> float:
        return float(sum(self.x_ded) + self.x_sh)

    def ceil(self) -> Allocation:
        """Integer PRB allocation, every component rounded up."""
        return Allocation(tuple(float(math.ceil(v)) for v in self.x_ded), float(math.ceil(self.x_sh)))

    def dominates(self, other: Allocation) -> bool:
        """True when every component is at least the other's."""
        return bool(np.all(self.as_vector() >= other.as_vector()))


@dataclass(frozen=True)
class GridSchedule:
    """Water-filling result for every UE and slot.

    Attributes:
        y_ded: dedicated PRBs, shape (U, K, T)
        y_sh: shared PRBs, shape (U, K, T)
        beta: dedicated water level per slice, (S, K, T); inf where the pool is empty
        nu: shared water level, (K, T); inf where the pool is empty
        lam: dedicated budget multipliers, (S, K, T)
        nu_dual: shared budget multiplier, (K, T)
        gamma: multipliers of y_ded >= 0, (U, K, T)
        sigma: multipliers of y_sh >= 0, (U, K, T)
        slice_of: slice of each UE, (U,)
    """

    y_ded: np.ndarray
    y_sh: np.ndarray
    beta: np.ndarray
    nu: np.ndarray
    lam: np.ndarray
    nu_dual: np.ndarray
    gamma: np.ndarray
    sigma: np.ndarray
    slice_of: np.ndarray

    @property
    def y_total(self) -> np.ndarray:
        return self.y_ded + self.y_sh

    def slot(self, k: int, t: int) -> SlotSchedule:
        """Schedule of one (k, t) slot."""
        return SlotSchedule(
            y_ded=self.y_ded[:, k, t],
            y_sh=self.y_sh[:, k, t],
            beta=self.beta[:, k, t],
            nu=float(self.nu[k, t]),
            lam=self.lam[:, k, t],
            nu_dual=float(self.nu_dual[k, t]),
            gamma=self.gamma[:, k, t],
            sigma=self.sigma[:, k, t],
            slice_of=self.slice_of,
        )


@dataclass(frozen=True)
class SlotSchedule:
    """Per-UE PRBs, water levels and multipliers of one slot.

    ``nu`` is the shared water level (inf when the pool is empty) and
    ``nu_dual`` the multiplier of the shared budget, which equals ``nu``
    whenever the shared pool is nonempty.
    """

    y_ded: np.ndarray
    y_sh: np.ndarray
    beta: np.ndarray
    nu: float
    lam: np.ndarray
    nu_dual: float
    gamma: np.ndarray
    sigma: np.ndarray
    slice_of: np.ndarray

    @property
    def y_total(self) -> np.ndarray:
        return self.y_ded + self.y_sh


@dataclass(frozen=True)
class KktReport:
    """Largest violation of each KKT condition family."""

    stationarity: float
    complementary_slackness: float
    primal_feasibility: float
    dual_feasibility: float

    @property
    def max_violation(self) -> float:
        return max(
            self.stationarity,
            self.complementary_slackness,
            self.primal_feasibility,
            self.dual_feasibility,
        )

    def ok(self, tol: float = 1e-8) -> bool:
        return self.max_violation <= tol


def water_height(bases: np.ndarray, budget: float | np.ndarray) -> np.ndarray:
    """Height ``L`` with ``sum(max(L - bases, 0), axis=0) == budget``.

    Solved exactly through the sorted active set: after sorting the bases the
    active UEs are a prefix, and the prefix length is the number of candidate
    levels that clear their own base. A zero budget returns the lowest base.
    """
    ordered = np.sort(bases, axis=0)
    n = ordered.shape[0]
    counts = np.arange(1, n + 1, dtype=float).reshape((n,) + (1,) * (ordered.ndim - 1))
    levels = (np.asarray(budget, dtype=float) + np.cumsum(ordered, axis=0)) / counts
    active = (levels > ordered).sum(axis=0)
    idx = np.maximum(active - 1, 0)
    level = np.take_along_axis(levels, idx[np.newaxis], axis=0)[0]
    return np.where(active > 0, level, ordered[0])


def _check_etas(etas: np.ndarray) -> None:
    if etas.size and not np.all(etas > 0):
        raise ValueError("spectral efficiencies must be strictly positive")


def dedicated_level(etas: Sequence[float] | np.ndarray, budget: float) -> tuple[float, np.ndarray]:
    """Stage one for a single slice and slot.

    Args:
        etas: SE of the slice's UEs
        budget: dedicated PRBs of the slice

    Returns:
        (beta, y_ded); beta is inf when the budget is 0
    """
    e = np.asarray(etas, dtype=float)
    _check_etas(e)
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    if e.size == 0:
        if budget > 0:
            raise ValueError(f"slice has no UEs but a dedicated budget of {budget}")
        return math.inf, e
    if budget == 0:
        return math.inf, np.zeros_like(e)
    bases = 1.0 / e
    level = float(water_height(bases, budget))
    return 1.0 / level, np.maximum(level - bases, 0.0)


def shared_level(
    etas: Sequence[float] | np.ndarray,
    y_ded: Sequence[float] | np.ndarray,
    budget: float,
) -> tuple[float, np.ndarray]:
    """Stage two: level the shared pool over ``1/eta + y_ded``.

    Returns:
        (nu, y_sh); nu is inf when the budget is 0
    """
    e = np.asarray(etas, dtype=float)
    yd = np.asarray(y_ded, dtype=float)
    _check_etas(e)
    if budget < 0:
        raise ValueError(f"budget must be nonnegative, got {budget}")
    if e.shape != yd.shape:
        raise ValueError(f"etas {e.shape} and y_ded {yd.shape} differ in shape")
    if budget == 0 or e.size == 0:
        if budget > 0:
            raise ValueError(f"no UEs to take a shared budget of {budget}")
        return math.inf, np.zeros_like(e)
    bases = 1.0 / e + yd
    level = float(water_height(bases, budget))
    return 1.0 / level, np.maximum(level - bases, 0.0)


def _clip_dual(values: np.ndarray, name: str) -> np.ndarray:
    worst = float(values.min()) if values.size else 0.0
    if worst < -DUAL_CLIP_TOL:
        raise DualRecoveryError(f"{name} multiplier {worst:.3e} is negative")
    return np.maximum(values, 0.0)


def schedule_grid(
    allocation: Allocation,
    etas: np.ndarray,
    slice_of: Sequence[int] | np.ndarray,
) -> GridSchedule:
    """Run both water-filling stages in every (k, t) slot of ``etas`` (U, K, T)."""
    e = np.asarray(etas, dtype=float)
    slices = np.asarray(slice_of, dtype=np.int64)
    if e.ndim != 3 or slices.shape != (e.shape[0],):
        raise ValueError(f"etas must be (U, K, T) with one slice per UE, got {e.shape}, {slices.shape}")
    _check_etas(e)
    if slices.size and slices.max() >= allocation.slice_count:
        raise ValueError(
            f"UE mapped to slice {slices.max()} but the allocation has {allocation.slice_count} slices"
        )
    n_slices = allocation.slice_count
    grid = e.shape[1:]
    bases = 1.0 / e

    y_ded = np.zeros_like(e)
    beta = np.full((n_slices, *grid), math.inf)
    for s, budget in enumerate(allocation.x_ded):
        members = np.flatnonzero(slices == s)
        if budget == 0:
            continue
        if members.size == 0:
            raise ValueError(f"slice {s} has no UEs but a dedicated budget of {budget}")
        level = water_height(bases[members], budget)
        beta[s] = 1.0 / level
        y_ded[members] = np.maximum(level - bases[members], 0.0)

    y_sh = np.zeros_like(e)
    nu = np.full(grid, math.inf)
    if allocation.x_sh > 0:
        if e.shape[0] == 0:
            raise ValueError(f"no UEs to take a shared budget of {allocation.x_sh}")
        stacked = bases + y_ded
        level = water_height(stacked, allocation.x_sh)
        nu = 1.0 / level
        y_sh = np.maximum(level - stacked, 0.0)

    # marginal utility eta / (1 + eta * y) at the optimum
    marginal = 1.0 / (bases + y_ded + y_sh)
    nu_dual = nu if allocation.x_sh > 0 else marginal.max(axis=0, initial=0.0)

    lam = np.zeros((n_slices, *grid))
    for s, budget in enumerate(allocation.x_ded):
        members = np.flatnonzero(slices == s)
        if budget > 0:
            lam[s] = np.minimum(beta[s], nu_dual)
        elif members.size:
            lam[s] = np.minimum(marginal[members].max(axis=0), nu_dual)
    gamma = _clip_dual(lam[slices] - marginal, "dedicated non-negativity")
    sigma = _clip_dual(nu_dual[np.newaxis] - marginal, "shared non-negativity")

    return GridSchedule(
        y_ded=y_ded,
        y_sh=y_sh,
        beta=beta,
        nu=np.asarray(nu, dtype=float),
        lam=lam,
        nu_dual=np.asarray(nu_dual, dtype=float),
        gamma=gamma,
        sigma=sigma,
        slice_of=slices,
    )


def schedule_slot(
    allocation: Allocation,
    etas: Sequence[float] | np.ndarray,
    slice_of: Sequence[int] | np.ndarray,
) -> SlotSchedule:
    """Optimal PRB split of one slot under ``allocation``."""
    e = np.asarray(etas, dtype=float)
    if e.ndim != 1:
        raise ValueError(f"etas must be one value per UE, got shape {e.shape}")
    return schedule_grid(allocation, e[:, np.newaxis, np.newaxis], slice_of).slot(0, 0)


def slot_utility(
    etas: Sequence[float] | np.ndarray,
    y_ded: Sequence[float] | np.ndarray,
    y_sh: Sequence[float] | np.ndarray,
) -> float:
    """Sum of log(1 + eta * (y_ded + y_sh)) over UEs."""
    e = np.asarray(etas, dtype=float)
    return float(np.log1p(e * (np.asarray(y_ded) + np.asarray(y_sh))).sum())


def kkt_residuals(
    schedule: SlotSchedule | GridSchedule,
    allocation: Allocation,
    etas: Sequence[float] | np.ndarray,
) -> KktReport:
    """Worst violation of every KKT family of the slot problem.

    Works on a single slot (arrays over U) or a grid (arrays over U, K, T);
    ``etas`` must have the matching shape.
    """
    e = np.asarray(etas, dtype=float)
    yd = np.asarray(schedule.y_ded, dtype=float)
    ys = np.asarray(schedule.y_sh, dtype=float)
    if e.shape != yd.shape or e.shape != ys.shape:
        raise ValueError(f"etas {e.shape} do not match the schedule {yd.shape}")
    slices = np.asarray(schedule.slice_of)
    lam = np.asarray(schedule.lam, dtype=float)
    nu = np.asarray(schedule.nu_dual, dtype=float)
    gamma = np.asarray(schedule.gamma, dtype=float)
    sigma = np.asarray(schedule.sigma, dtype=float)

    marginal = e / (1.0 + e * (yd + ys))
    stationarity = max(
        _worst(np.abs(marginal - lam[slices] + gamma)),
        _worst(np.abs(marginal - nu + sigma)),
    )

    ded_gap = np.zeros_like(lam)
    for s, budget in enumerate(allocation.x_ded):
        ded_gap[s] = budget - yd[slices == s].sum(axis=0)
    sh_gap = allocation.x_sh - ys.sum(axis=0)

    slackness = max(
        _worst(np.abs(lam * ded_gap)),
        _worst(np.abs(nu * sh_gap)),
        _worst(np.abs(gamma * yd)),
        _worst(np.abs(sigma * ys)),
    )
    primal = max(
        _worst(-yd),
        _worst(-ys),
        _worst(np.abs(ded_gap)),
        _worst(np.abs(sh_gap)),
    )
    dual = max(_worst(-lam), _worst(-nu), _worst(-gamma), _worst(-sigma))
    return KktReport(
        stationarity=stationarity,
        complementary_slackness=slackness,
        primal_feasibility=primal,
        dual_feasibility=dual,
    )


def _worst(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return max(float(values.max()), 0.0) if values.size else 0.0


def max_throughput_slot(
    allocation: Allocation,
    etas: Sequence[float] | np.ndarray,
    slice_of: Sequence[int] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Every pool goes whole to its best-SE UE; returns (y_ded, y_sh)."""
    e = np.asarray(etas, dtype=float)
    slices = np.asarray(slice_of)
    y_ded = np.zeros_like(e)
    y_sh = np.zeros_like(e)
    for s, budget in enumerate(allocation.x_ded):
        members = np.flatnonzero(slices == s)
        if members.size:
            y_ded[members[np.argmax(e[members])]] = budget
    if e.size:
        y_sh[np.argmax(e)] = allocation.x_sh
    return y_ded, y_sh


def round_robin_slot(
    allocation: Allocation,
    etas: Sequence[float] | np.ndarray,
    slice_of: Sequence[int] | np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Equal shares, ignoring channel quality; returns (y_ded, y_sh)."""
    e = np.asarray(etas, dtype=float)
    slices = np.asarray(slice_of)
    y_ded = np.zeros_like(e)
    for s, budget in enumerate(allocation.x_ded):
        members = np.flatnonzero(slices == s)
        if members.size:
            y_ded[members] = budget / members.size
    y_sh = np.full_like(e, allocation.x_sh / e.size) if e.size else np.zeros_like(e)
    return y_ded, y_sh
