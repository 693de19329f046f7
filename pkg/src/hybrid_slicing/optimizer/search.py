"""Simulation-driven search for the smallest SLA-feasible allocation.

Feasibility is monotone in every allocation component: more PRBs in any pool
never lengthen a queue. The search leans on that twice. Points dominated by a
known infeasible point are infeasible, points dominating a known feasible
point are feasible, and for a fixed prefix the smallest feasible value of the
last component can be found by bisection on the grid.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from hybrid_slicing.mip.builder import FormulationKind
from hybrid_slicing.queueing.simulator import SlaSpec, simulate, sla_satisfied
from hybrid_slicing.samples import SampleSet
from hybrid_slicing.scheduler.waterfilling import Allocation

logger = logging.getLogger(__name__)

CEIL_TOL = 1e-9
MAX_REFINE_MOVES = 50


@dataclass(frozen=True)
class SearchSpec:
    """Grid search settings.

    Attributes:
        grid_step: coarse PRB granularity
        x_max: upper bound of every free component
        refinement_rounds: each round halves the step around the incumbent
        mode: which pools may be nonzero
    """

    grid_step: float = 1.0
    x_max: float = 100.0
    refinement_rounds: int = 2
    mode: FormulationKind = FormulationKind.HYRA

    def __post_init__(self) -> None:
        if not self.grid_step > 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step}")
        if self.x_max < self.grid_step:
            raise ValueError(f"x_max ({self.x_max}) must be at least grid_step ({self.grid_step})")
        if self.refinement_rounds < 0:
            raise ValueError(f"refinement_rounds must be nonnegative, got {self.refinement_rounds}")
        object.__setattr__(self, "mode", FormulationKind(self.mode))

    def with_mode(self, mode: FormulationKind) -> SearchSpec:
        return SearchSpec(self.grid_step, self.x_max, self.refinement_rounds, mode)

    @property
    def final_step(self) -> float:
        return self.grid_step / 2**self.refinement_rounds


@dataclass(frozen=True)
class OptResult:
    """Outcome of one search.

    ``best`` is the integer allocation actually deployed (every component of
    ``best_relaxed`` rounded up); both are None when even x_max fails.
    """

    mode: FormulationKind
    best: Allocation | None
    best_relaxed: Allocation | None
    feasible: bool
    evaluations: int
    pruned: int

    @property
    def total_prbs(self) -> float:
        return self.best.total if self.best is not None else math.nan

    @property
    def relaxed_total(self) -> float:
        return self.best_relaxed.total if self.best_relaxed is not None else math.nan


class FeasibilityOracle:
    """Cached SLA feasibility of full allocation vectors ``[x_ded..., x_sh]``."""

    def __init__(self, samples: SampleSet, sla: SlaSpec, slice_count: int | None = None) -> None:
        self.samples = samples
        self.sla = sla
        self.slice_count = slice_count if slice_count is not None else max(
            samples.slice_count, len(sla.budgets)
        )
        self.evaluations = 0
        self._cache: dict[tuple[float, ...], bool] = {}
        self._feasible: list[np.ndarray] = []
        self._infeasible: list[np.ndarray] = []
        self.pruned_points: list[tuple[float, ...]] = []

    def evaluate(self, vector: Sequence[float]) -> bool:
        """Simulate without consulting the cache."""
        allocation = Allocation.from_vector(vector)
        _, report = simulate(allocation, self.samples)
        return sla_satisfied(report, self.sla).satisfied

    def __call__(self, vector: Sequence[float]) -> bool:
        key = tuple(float(v) for v in vector)
        if len(key) != self.slice_count + 1:
            raise ValueError(f"expected {self.slice_count + 1} components, got {len(key)}")
        if key in self._cache:
            return self._cache[key]
        point = np.asarray(key)
        if self._infeasible and np.any(np.all(np.asarray(self._infeasible) >= point, axis=1)):
            self.pruned_points.append(key)
            self._cache[key] = False
            return False
        if self._feasible and np.any(np.all(np.asarray(self._feasible) <= point, axis=1)):
            self.pruned_points.append(key)
            self._cache[key] = True
            return True
        self.evaluations += 1
        result = self.evaluate(key)
        self._cache[key] = result
        (self._feasible if result else self._infeasible).append(point)
        return result

    def audit_pruned(self, fraction: float = 0.01, seed: int = 0) -> list[tuple[float, ...]]:
        """Re-simulate a random share of pruned points; returns those the cache got wrong."""
        if not self.pruned_points:
            return []
        rng = np.random.default_rng(seed)
        count = max(1, int(round(fraction * len(self.pruned_points))))
        picks = rng.choice(len(self.pruned_points), size=min(count, len(self.pruned_points)), replace=False)
        wrong = []
        for idx in sorted(picks):
            key = self.pruned_points[idx]
            if self.evaluate(key) != self._cache[key]:
                wrong.append(key)
        if wrong:
            logger.warning(f"{len(wrong)} pruned points disagree with a fresh simulation")
        return wrong


def free_components(mode: FormulationKind, slice_count: int) -> list[int]:
    """Positions of ``[x_ded..., x_sh]`` the search may move."""
    if mode is FormulationKind.HYRA:
        return list(range(slice_count + 1))
    if mode is FormulationKind.DEDICATED_ONLY:
        return list(range(slice_count))
    return [slice_count]


def _embed(free: Sequence[float], positions: list[int], size: int) -> tuple[float, ...]:
    full = [0.0] * size
    for pos, value in zip(positions, free):
        full[pos] = float(value)
    return tuple(full)


def _order_key(vector: Sequence[float]) -> tuple[float, tuple[float, ...]]:
    """Smaller total first; totals equal to 1e-9 fall back to the lexicographic order of the vector."""
    return (round(math.fsum(vector), 9), tuple(vector))


def _smallest_last(
    oracle: FeasibilityOracle,
    lead: tuple[float, ...],
    grid: np.ndarray,
    hi_idx: int,
    positions: list[int],
    size: int,
) -> int | None:
    """Smallest grid index of the last free component that is feasible, up to ``hi_idx``."""
    if hi_idx < 0 or not oracle(_embed((*lead, grid[hi_idx]), positions, size)):
        return None
    lo, hi = -1, hi_idx
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if oracle(_embed((*lead, grid[mid]), positions, size)):
            hi = mid
        else:
            lo = mid
    return hi


def _coarse_search(
    oracle: FeasibilityOracle,
    spec: SearchSpec,
    positions: list[int],
    size: int,
    incumbent: tuple[float, ...] | None,
) -> tuple[float, ...] | None:
    """Exhaustive grid search, walked depth first in lexicographic order.

    A branch stops once its partial total exceeds the incumbent, and a whole
    subtree is skipped when its corner (every remaining component at the
    largest value still worth trying) is infeasible. Points tying the
    incumbent on total are still visited, and among equal totals the
    lexicographically smallest free vector wins, whatever the warm start.
    """
    grid = np.arange(0.0, spec.x_max + CEIL_TOL, spec.grid_step)
    grid = grid[grid <= spec.x_max + CEIL_TOL]
    n_lead = len(positions) - 1
    best_total = math.fsum(incumbent) if incumbent is not None else math.inf
    best_free = None if incumbent is None else tuple(incumbent[p] for p in positions)
    hints: dict[tuple[float, ...], int] = {}

    def cap_index(room: float) -> int:
        if math.isinf(room):
            return len(grid) - 1
        return min(int(np.searchsorted(grid, room + CEIL_TOL, side="right")) - 1, len(grid) - 1)

    def leaf(lead: tuple[float, ...]) -> None:
        nonlocal best_total, best_free
        hi_idx = cap_index(best_total - math.fsum(lead))
        prefix = lead[:-1]
        if prefix in hints:
            hi_idx = min(hi_idx, hints[prefix])
        last = _smallest_last(oracle, lead, grid, hi_idx, positions, size)
        if last is None:
            return
        hints[prefix] = last
        candidate = (*lead, float(grid[last]))
        if best_free is None or _order_key(candidate) < _order_key(best_free):
            best_free, best_total = candidate, math.fsum(candidate)
            logger.debug(f"{spec.mode.value}: incumbent {candidate} (total {best_total:g})")

    def visit(prefix: tuple[float, ...], partial: float) -> None:
        if len(prefix) == n_lead:
            leaf(prefix)
            return
        for value in grid:
            if partial + value > best_total + CEIL_TOL:
                break
            cap = cap_index(best_total - partial - value)
            if cap < 0:
                continue
            corner = (*prefix, float(value)) + (float(grid[cap]),) * (n_lead - len(prefix))
            if not oracle(_embed(corner, positions, size)):
                continue
            visit((*prefix, float(value)), partial + float(value))

    visit((), 0.0)
    return None if best_free is None else _embed(best_free, positions, size)


def _neighbours(best: tuple[float, ...], step: float, x_max: float) -> set[tuple[float, ...]]:
    """Points moving one or two components by up to two steps."""
    offsets = (-2, -1, 1, 2)
    out: set[tuple[float, ...]] = set()

    def moved(changes: dict[int, int]) -> tuple[float, ...]:
        return tuple(
            min(max(c + changes.get(i, 0) * step, 0.0), x_max) for i, c in enumerate(best)
        )

    for i in range(len(best)):
        for a in offsets:
            out.add(moved({i: a}))
    for i, j in itertools.combinations(range(len(best)), 2):
        for a, b in itertools.product(offsets, repeat=2):
            out.add(moved({i: a, j: b}))
    return out


def _refine(
    oracle: FeasibilityOracle,
    spec: SearchSpec,
    positions: list[int],
    size: int,
    incumbent: tuple[float, ...],
) -> tuple[float, ...]:
    step = spec.grid_step
    best = tuple(incumbent[p] for p in positions)
    for _ in range(spec.refinement_rounds):
        step /= 2
        for _ in range(MAX_REFINE_MOVES):
            candidates = sorted(
                (c for c in _neighbours(best, step, spec.x_max) if _order_key(c) < _order_key(best)),
                key=_order_key,
            )
            improved = next((c for c in candidates if oracle(_embed(c, positions, size))), None)
            if improved is None:
                break
            best = improved
        logger.debug(f"{spec.mode.value}: refined to {best} at step {step:g}")
    return _embed(best, positions, size)


def minimize_allocation(
    spec: SearchSpec,
    samples: SampleSet,
    sla: SlaSpec,
    warm_start: Iterable[Allocation | None] = (),
    oracle: FeasibilityOracle | None = None,
) -> OptResult:
    """Smallest-total allocation meeting ``sla`` under the pools ``spec.mode`` allows.

    Args:
        spec: grid settings and formulation kind
        samples: the sample set every candidate is simulated on
        sla: delay budgets
        warm_start: known allocations to seed the incumbent; components the
            mode does not allow must be zero
        oracle: reuse a feasibility cache built on the same samples and SLA
    """
    oracle = oracle or FeasibilityOracle(samples, sla)
    n_slices = oracle.slice_count
    size = n_slices + 1
    positions = free_components(spec.mode, n_slices)
    evaluations_before = oracle.evaluations
    pruned_before = len(oracle.pruned_points)

    ceiling = _embed([spec.x_max] * len(positions), positions, size)
    if not oracle(ceiling):
        logger.warning(f"{spec.mode.value}: infeasible even at x_max={spec.x_max:g} per pool")
        return OptResult(
            spec.mode, None, None, False,
            oracle.evaluations - evaluations_before, len(oracle.pruned_points) - pruned_before,
        )

    incumbent: tuple[float, ...] | None = None
    for allocation in warm_start:
        if allocation is None:
            continue
        vector = tuple(float(v) for v in allocation.as_vector())
        if any(v > 0 for i, v in enumerate(vector) if i not in positions):
            raise ValueError(f"warm start {vector} uses pools {spec.mode.value} excludes")
        if oracle(vector) and (incumbent is None or _order_key(vector) < _order_key(incumbent)):
            incumbent = vector

    incumbent = _coarse_search(oracle, spec, positions, size, incumbent)
    if incumbent is None:
        incumbent = ceiling
    incumbent = _refine(oracle, spec, positions, size, incumbent)

    relaxed = Allocation.from_vector(incumbent)
    best = Allocation.from_vector([max(math.ceil(v - CEIL_TOL), 0) for v in incumbent])
    if not oracle(best.as_vector()):
        logger.warning(f"{spec.mode.value}: rounded allocation {best.as_vector()} failed the SLA")
    result = OptResult(
        mode=spec.mode,
        best=best,
        best_relaxed=relaxed,
        feasible=True,
        evaluations=oracle.evaluations - evaluations_before,
        pruned=len(oracle.pruned_points) - pruned_before,
    )
    logger.info(
        f"{spec.mode.value}: {relaxed.total:g} PRBs relaxed, {best.total:g} rounded, "
        f"{result.evaluations} simulations, {result.pruned} pruned"
    )
    return result


def bisect_shared_total(
    samples: SampleSet,
    sla: SlaSpec,
    x_max: float = 100.0,
    tol: float = 1e-3,
) -> float | None:
    """Smallest shared-only pool to within ``tol`` by continuous bisection."""
    oracle = FeasibilityOracle(samples, sla)
    n_slices = oracle.slice_count

    def feasible(x_sh: float) -> bool:
        return oracle.evaluate([0.0] * n_slices + [x_sh])

    if feasible(0.0):
        return 0.0
    if not feasible(x_max):
        return None
    lo, hi = 0.0, float(x_max)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi

