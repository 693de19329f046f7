"""Property suites behind ``hybrid-slicing verify``.

Each suite draws its own random instances from ``seed`` and reports the worst
residual it saw. A suite passes when no instance breaks its property.
"""

from __future__ import annotations

import logging
import tempfile
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

from hybrid_slicing.channel.model import synthesize_se
from hybrid_slicing.mip.builder import (
    BIG_M_HEADROOM_LIMIT,
    FormulationKind,
    big_m_headroom,
    build,
    check_solution,
    lift_assignment,
)
from hybrid_slicing.mip.equivalence import verify_transform_equivalence
from hybrid_slicing.mip.lp_format import export_lp, parse_lp
from hybrid_slicing.optimizer.search import FeasibilityOracle, SearchSpec, minimize_allocation
from hybrid_slicing.queueing.simulator import SlaSpec, run_queues, simulate
from hybrid_slicing.samples import SampleSet
from hybrid_slicing.scheduler.waterfilling import (
    Allocation,
    kkt_residuals,
    max_throughput_slot,
    round_robin_slot,
    schedule_slot,
    slot_utility,
)
from hybrid_slicing.traffic.generator import (
    ParetoSpec,
    TrafficSpec,
    generate_arrivals,
    hill_estimator,
    sample_pareto,
)

logger = logging.getLogger(__name__)

KKT_TOL = 1e-8
EQUIVALENCE_TOL = 1e-8
MIP_TOL = 1e-6
HILL_TOL = 0.15
HILL_ALPHAS = (1.05, 1.5, 1.95)
HILL_SAMPLES = 100_000
ORACLE_TOL = 1e-6
ORACLE_MAX_UES = 8
MIP_SCENARIOS = 20
TINY_SEARCH = SearchSpec(grid_step=1.0, x_max=30.0, refinement_rounds=1)


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of one property suite."""

    name: str
    passed: bool
    checked: int
    worst: float
    detail: str = ""


def random_slot(rng: np.random.Generator) -> tuple[Allocation, np.ndarray, np.ndarray]:
    """2-5 slices of 2-8 UEs, SE in (0.1, 7.4], pools in [0, 20] (10% exactly 0)."""
    n_slices = int(rng.integers(2, 6))
    sizes = rng.integers(2, 9, size=n_slices)
    slice_of = np.repeat(np.arange(n_slices), sizes)
    etas = rng.uniform(0.1, 7.4, size=slice_of.size)
    pools = rng.uniform(0.0, 20.0, size=n_slices + 1)
    pools[rng.random(n_slices + 1) < 0.1] = 0.0
    return Allocation.from_vector(pools), etas, slice_of


def small_slot(rng: np.random.Generator) -> tuple[Allocation, np.ndarray, np.ndarray]:
    """2-4 slices and at most 8 UEs, SE in (0.1, 7.4], pools in [0, 20] (10% exactly 0)."""
    n_slices = int(rng.integers(2, 5))
    sizes = rng.integers(1, ORACLE_MAX_UES // n_slices + 1, size=n_slices)
    slice_of = np.repeat(np.arange(n_slices), sizes)
    etas = rng.uniform(0.1, 7.4, size=slice_of.size)
    pools = rng.uniform(0.0, 20.0, size=n_slices + 1)
    pools[rng.random(n_slices + 1) < 0.1] = 0.0
    return Allocation.from_vector(pools), etas, slice_of


def reference_utility(allocation: Allocation, etas: np.ndarray, slice_of: np.ndarray) -> float:
    """Optimal slot utility from scipy's SLSQP, with no use of water levels.

    One variable per (pool, UE) pair with a positive pool; empty pools are
    left out so that no equality row is degenerate.
    """
    etas = np.asarray(etas, dtype=float)
    slice_of = np.asarray(slice_of)
    pools = [(np.flatnonzero(slice_of == s), b) for s, b in enumerate(allocation.x_ded) if b > 0]
    if allocation.x_sh > 0:
        pools.append((np.arange(etas.size), allocation.x_sh))
    if not pools:
        return 0.0
    owner = np.concatenate([members for members, _ in pools])
    rows = np.zeros((len(pools), owner.size))
    start = 0
    for row, (members, _) in enumerate(pools):
        rows[row, start:start + members.size] = 1.0
        start += members.size
    budgets = np.array([b for _, b in pools])
    upper = rows.T @ budgets

    def negative_utility(v: np.ndarray) -> tuple[float, np.ndarray]:
        rate = 1.0 + etas * np.bincount(owner, weights=v, minlength=etas.size)
        return -float(np.log(rate).sum()), -(etas / rate)[owner]

    start_point = rows.T @ (budgets / rows.sum(axis=1))
    result = optimize.minimize(
        negative_utility,
        start_point,
        jac=True,
        method="SLSQP",
        bounds=optimize.Bounds(np.zeros(owner.size), upper),
        constraints=[{"type": "eq", "fun": lambda v: rows @ v - budgets, "jac": lambda v: rows}],
        options={"ftol": 1e-15, "maxiter": 1000},
    )
    return -float(result.fun)


def tiny_samples(rng: np.random.Generator) -> tuple[SampleSet, SlaSpec]:
    """At most 2 slices and 4 UEs, K=1, T<=3."""
    n_slices = int(rng.integers(1, 3))
    sizes = rng.integers(1, 3, size=n_slices)
    slice_of = np.repeat(np.arange(n_slices), sizes)
    horizon = int(rng.integers(1, 4))
    shape = (slice_of.size, 1, horizon)
    samples = SampleSet(
        rng.integers(0, 600, size=shape),
        rng.uniform(0.5, 7.4, size=shape),
        slice_of,
    )
    return samples, SlaSpec(tuple(rng.uniform(1.5, 3.0, size=n_slices)))


def kkt_suite(trials: int, seed: int) -> SuiteResult:
    """Water-filling meets every KKT family, matches an SLSQP solve and beats both naive schedulers."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_gap = 0.0
    failures = 0
    for _ in range(trials):
        allocation, etas, slice_of = random_slot(rng)
        schedule = schedule_slot(allocation, etas, slice_of)
        worst = max(worst, kkt_residuals(schedule, allocation, etas).max_violation)
        utility = slot_utility(etas, schedule.y_ded, schedule.y_sh)
        rivals = (
            max_throughput_slot(allocation, etas, slice_of),
            round_robin_slot(allocation, etas, slice_of),
        )
        if any(slot_utility(etas, yd, ys) > utility + 1e-9 for yd, ys in rivals):
            failures += 1

        allocation, etas, slice_of = small_slot(rng)
        schedule = schedule_slot(allocation, etas, slice_of)
        gap = abs(slot_utility(etas, schedule.y_ded, schedule.y_sh) - reference_utility(allocation, etas, slice_of))
        worst_gap = max(worst_gap, gap)
    passed = failures == 0 and worst <= KKT_TOL and worst_gap <= ORACLE_TOL
    detail = f"{failures} instances beaten by a naive schedule, SLSQP gap {worst_gap:.2e}"
    return SuiteResult("kkt", passed, trials, worst, detail)


def equivalence_suite(trials: int, seed: int) -> SuiteResult:
    report = verify_transform_equivalence(trials=trials, seed=seed, tol=EQUIVALENCE_TOL)
    return SuiteResult(
        "equivalence",
        report.passed,
        trials,
        max(report.worst_forward, report.worst_backward),
        f"{len(report.forward_failures)} forward / {len(report.backward_failures)} backward failures",
    )


def mip_suite(trials: int, seed: int) -> SuiteResult:
    """Lifted grid optima satisfy every row of all three exported models."""
    rng = np.random.default_rng(seed)
    scenarios = max(1, min(trials, MIP_SCENARIOS))
    worst = 0.0
    problems: list[str] = []
    checked = 0
    with tempfile.TemporaryDirectory() as tmp:
        for n in range(scenarios):
            samples, sla = tiny_samples(rng)
            for kind in FormulationKind:
                result = minimize_allocation(TINY_SEARCH.with_mode(kind), samples, sla)
                if result.best is None:
                    logger.debug(f"scenario {n} {kind.value}: infeasible at x_max, skipped")
                    continue
                model = build(kind, samples, sla)
                assignment = lift_assignment(model, result.best, samples)
                report = check_solution(model, assignment, MIP_TOL)
                headroom = big_m_headroom(model, assignment)
                worst = max(worst, report.max_violation)
                checked += 1
                if not report.ok(MIP_TOL):
                    problems.append(f"{n}/{kind.value}: {report.violated(MIP_TOL)}")
                if headroom >= BIG_M_HEADROOM_LIMIT:
                    problems.append(f"{n}/{kind.value}: Big-M headroom {headroom:.3f}")
                parsed = parse_lp(export_lp(model, Path(tmp) / f"{n}_{kind.value}.lp"))
                counts = model.counts
                if len(parsed.constraints) != counts.constraints or len(parsed.binaries) != counts.binaries:
                    problems.append(f"{n}/{kind.value}: LP re-parse count mismatch")
    return SuiteResult("mip", not problems and checked > 0, checked, worst, "; ".join(problems[:5]))


def queue_suite(trials: int, seed: int) -> SuiteResult:
    """Work conservation and backlog balance of the queue recursion."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        shape = (3, 2, int(rng.integers(1, 12)))
        arrivals = rng.integers(0, 1000, size=shape).astype(float)
        capacity = rng.uniform(0.0, 800.0, size=shape)
        state = run_queues(arrivals, capacity)
        q, served = state.queue, state.served
        offered = q[..., :-1] + arrivals
        worst = max(
            worst,
            float(np.abs(q[..., 1:] - (offered - served)).max()),
            float(np.abs(served - np.minimum(offered, capacity)).max()),
            float(np.abs(q[..., 0]).max()),
        )
    return SuiteResult("queue", worst <= 1e-9, trials, worst)


def monotonicity_suite(trials: int, seed: int) -> SuiteResult:
    """More PRBs in any pool never raise any UE's delay."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        shape = (4, 2, 8)
        samples = SampleSet(
            rng.integers(0, 3000, size=shape),
            rng.uniform(0.1, 7.4, size=shape),
            np.array([0, 0, 1, 1]),
        )
        low = rng.uniform(0.0, 10.0, size=3)
        high = low + rng.uniform(0.0, 5.0, size=3) * (rng.random(3) < 0.7)
        _, before = simulate(Allocation.from_vector(low), samples)
        _, after = simulate(Allocation.from_vector(high), samples)
        worst = max(worst, float((after.per_sample - before.per_sample).max()))
    return SuiteResult("monotonicity", worst <= 1e-9, trials, max(worst, 0.0))


def permutation_suite(trials: int, seed: int) -> SuiteResult:
    """Relabelling UEs relabels the schedule and nothing else."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        allocation, etas, slice_of = random_slot(rng)
        order = rng.permutation(etas.size)
        base = schedule_slot(allocation, etas, slice_of)
        permuted = schedule_slot(allocation, etas[order], slice_of[order])
        worst = max(
            worst,
            float(np.abs(permuted.y_ded - base.y_ded[order]).max()),
            float(np.abs(permuted.y_sh - base.y_sh[order]).max()),
        )
    return SuiteResult("permutation", worst <= 1e-9, trials, worst)


def hill_suite(trials: int, seed: int) -> SuiteResult:
    """The Hill estimator recovers each Pareto tail index within 0.15."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for alpha in HILL_ALPHAS:
        draws = sample_pareto(ParetoSpec(alpha=alpha, scale=1.0), rng, HILL_SAMPLES)
        worst = max(worst, abs(hill_estimator(draws) - alpha))
    return SuiteResult("hill", worst <= HILL_TOL, len(HILL_ALPHAS), worst)


def determinism_suite(trials: int, seed: int) -> SuiteResult:
    """Traces do not depend on how UEs are batched, and searches repeat exactly."""
    spec = TrafficSpec.normalized(1.5, 800.0)
    whole = generate_arrivals(spec, 4, 3, 10, seed).bits
    split = np.concatenate([
        generate_arrivals(spec, 2, 3, 10, seed).bits,
        generate_arrivals(spec, 2, 3, 10, seed, ue_offset=2).bits,
    ])
    se_whole = synthesize_se("mixed", 4, 3, 10, seed).values
    se_again = synthesize_se("mixed", 4, 3, 10, seed).values
    problems = []
    if not np.array_equal(whole, split):
        problems.append("arrival streams depend on batching")
    if not np.array_equal(se_whole, se_again):
        problems.append("SE synthesis is not repeatable")

    samples, sla = tiny_samples(np.random.default_rng(seed))
    first = minimize_allocation(TINY_SEARCH, samples, sla)
    second = minimize_allocation(TINY_SEARCH, samples, sla)
    if first.best != second.best or first.best_relaxed != second.best_relaxed:
        problems.append("repeated search returned a different optimum")
    return SuiteResult("determinism", not problems, 3, 0.0, "; ".join(problems))


def pruning_suite(trials: int, seed: int) -> SuiteResult:
    """Points the oracle settled by dominance agree with a fresh simulation."""
    rng = np.random.default_rng(seed)
    wrong = 0
    audited = 0
    for _ in range(max(1, min(trials, 10))):
        samples, sla = tiny_samples(rng)
        oracle = FeasibilityOracle(samples, sla)
        minimize_allocation(TINY_SEARCH, samples, sla, oracle=oracle)
        wrong += len(oracle.audit_pruned(fraction=0.01, seed=seed))
        audited += 1
    return SuiteResult("pruning", wrong == 0, audited, float(wrong))


SUITES: dict[str, Callable[[int, int], SuiteResult]] = {
    "kkt": kkt_suite,
    "equivalence": equivalence_suite,
    "mip": mip_suite,
    "queue": queue_suite,
    "monotonicity": monotonicity_suite,
    "permutation": permutation_suite,
    "hill": hill_suite,
    "determinism": determinism_suite,
    "pruning": pruning_suite,
}


def run_suites(names: list[str] | None = None, trials: int = 1000, seed: int = 0) -> list[SuiteResult]:
    """Run the named suites (all of them by default) in registry order."""
    selected = list(SUITES) if not names else names
    unknown = [n for n in selected if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites {unknown}; choose from {list(SUITES)}")
    results = []
    for name in selected:
        result = SUITES[name](trials, seed)
        level = logging.INFO if result.passed else logging.WARNING
        outcome = "pass" if result.passed else "FAIL"
        logger.log(level, f"{name}: {outcome} over {result.checked} (worst {result.worst:.3e})")
        results.append(result)
    return results
