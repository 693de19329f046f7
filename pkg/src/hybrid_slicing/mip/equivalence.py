"""Numerical check that the reciprocal-dual constraints match the KKT system.

For one slice and one slot, with the shared allocation held fixed, the KKT
system of the dedicated stage (multipliers lambda, gamma) and the transformed
system (w = 1/lambda, no gamma) must admit exactly the same y_ded. Both
directions are sampled: KKT points are mapped forward and checked against the
transformed constraints, and transformed points are mapped back.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from hybrid_slicing.scheduler.waterfilling import water_height

logger = logging.getLogger(__name__)

ETA_RANGE = (0.1, 7.4)
BUDGET_MAX = 20.0
SHARED_MAX = 5.0


@dataclass(frozen=True)
class KktPoint:
    y_ded: np.ndarray
    lam: float
    gamma: np.ndarray


def _marginal(etas: np.ndarray, y_ded: np.ndarray, y_sh: np.ndarray) -> np.ndarray:
    return etas / (1.0 + etas * (y_ded + y_sh))


def kkt_set_residual(
    etas: np.ndarray,
    y_sh: np.ndarray,
    x_ded: float,
    y_ded: np.ndarray,
    lam: float,
    gamma: np.ndarray,
) -> float:
    """Worst violation of the dedicated-stage KKT system of one slice."""
    gamma = np.asarray(gamma, dtype=float)
    y_ded = np.asarray(y_ded, dtype=float)
    gap = x_ded - y_ded.sum()
    return max(
        float(np.abs(_marginal(etas, y_ded, y_sh) - lam + gamma).max(initial=0.0)),
        max(-gap, 0.0),
        abs(lam * gap),
        float(np.abs(gamma * y_ded).max(initial=0.0)),
        float(np.maximum(-gamma, 0.0).max(initial=0.0)),
        float(np.maximum(-y_ded, 0.0).max(initial=0.0)),
    )


def transformed_set_residual(
    etas: np.ndarray,
    y_sh: np.ndarray,
    x_ded: float,
    y_ded: np.ndarray,
    omega: float,
) -> float:
    """Worst violation of the linear-plus-complementarity system in ``w``.

    A nonpositive ``omega`` is reported as an infinite violation.
    """
    if not omega > 0:
        return math.inf
    y_ded = np.asarray(y_ded, dtype=float)
    slack = 1.0 + etas * (y_ded + y_sh - omega)
    return max(
        abs(y_ded.sum() - x_ded),
        float(np.maximum(-slack, 0.0).max(initial=0.0)),
        float(np.abs(y_ded * slack).max(initial=0.0)),
        float(np.maximum(-y_ded, 0.0).max(initial=0.0)),
    )


def solve_kkt_point(
    etas: np.ndarray, y_sh: np.ndarray, x_ded: float, extra_lambda: float = 0.0
) -> KktPoint:
    """KKT point of the dedicated stage with y_sh held fixed.

    Water-fills ``x_ded`` over ``1/eta + y_sh``. With an empty budget the
    multiplier is not unique: any value from the largest marginal upward
    works, and ``extra_lambda`` selects how far above it to go.
    """
    etas = np.asarray(etas, dtype=float)
    y_sh = np.asarray(y_sh, dtype=float)
    bases = 1.0 / etas + y_sh
    if x_ded > 0:
        level = float(water_height(bases, x_ded))
        y_ded = np.maximum(level - bases, 0.0)
        lam = 1.0 / level
    else:
        y_ded = np.zeros_like(etas)
        lam = float(_marginal(etas, y_ded, y_sh).max()) + extra_lambda
    gamma = np.maximum(lam - _marginal(etas, y_ded, y_sh), 0.0)
    return KktPoint(y_ded=y_ded, lam=lam, gamma=gamma)


@dataclass
class EquivalenceReport:
    """Worst residuals and failing trials of both directions."""

    trials: int
    tol: float
    worst_forward: float = 0.0
    worst_backward: float = 0.0
    forward_failures: list[int] = field(default_factory=list)
    backward_failures: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.forward_failures and not self.backward_failures


def verify_transform_equivalence(
    etas: np.ndarray | None = None,
    y_sh_fixed: np.ndarray | None = None,
    x_ded: float | None = None,
    trials: int = 1000,
    seed: int = 0,
    tol: float = 1e-8,
    max_ues: int = 6,
) -> EquivalenceReport:
    """Sample both directions of the equivalence over random slices.

    Args:
        etas: pin the SE of the slice; drawn per trial when omitted
        y_sh_fixed: pin the shared allocation; drawn per trial when omitted
        x_ded: pin the dedicated budget; drawn per trial when omitted
        trials: instances per direction
        seed: seed of the instance generator
        tol: membership tolerance
        max_ues: largest slice drawn when ``etas`` is omitted
    """
    rng = np.random.default_rng(seed)
    report = EquivalenceReport(trials=trials, tol=tol)

    for trial in range(trials):
        e = (
            np.asarray(etas, dtype=float)
            if etas is not None
            else rng.uniform(*ETA_RANGE, size=int(rng.integers(1, max_ues + 1)))
        )
        if y_sh_fixed is not None:
            ys = np.asarray(y_sh_fixed, dtype=float)
        else:
            ys = np.where(rng.random(e.size) < 0.5, 0.0, rng.uniform(0.0, SHARED_MAX, e.size))
        if ys.shape != e.shape or np.any(ys < 0):
            raise ValueError("y_sh must be nonnegative with one entry per UE")
        budget = float(x_ded) if x_ded is not None else (
            0.0 if rng.random() < 0.1 else float(rng.uniform(0.0, BUDGET_MAX))
        )

        # KKT point -> w = 1/lambda
        point = solve_kkt_point(e, ys, budget, extra_lambda=float(rng.uniform(0.0, 1.0)))
        forward = transformed_set_residual(e, ys, budget, point.y_ded, 1.0 / point.lam)
        report.worst_forward = max(report.worst_forward, forward)
        if forward > tol:
            report.forward_failures.append(trial)

        # transformed point -> lambda = 1/w, gamma from stationarity
        bases = 1.0 / e + ys
        if x_ded is not None:
            omega = (
                float(water_height(bases, budget))
                if budget > 0
                else float(rng.uniform(0.1, 1.0)) * float(bases.min())
            )
        else:
            omega = float(rng.uniform(0.5 * bases.min(), 1.5 * bases.max()))
        y_ded = np.maximum(omega - bases, 0.0)
        budget_back = float(y_ded.sum()) if x_ded is None else budget
        lam = 1.0 / omega
        gamma = lam - _marginal(e, y_ded, ys)
        backward = kkt_set_residual(e, ys, budget_back, y_ded, lam, gamma)
        report.worst_backward = max(report.worst_backward, backward)
        if backward > tol:
            report.backward_failures.append(trial)

    if not report.passed:
        logger.warning(
            f"Transform equivalence failed: {len(report.forward_failures)} forward, "
            f"{len(report.backward_failures)} backward of {trials} trials"
        )
    return report
