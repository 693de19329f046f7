"""Reference solvers that share no code with the package.

Used only by the tests: a bisection water-fill, and block-coordinate ascent and
an SLSQP solve of the slot problem.
"""

from __future__ import annotations

import numpy as np
from scipy import optimize


def bisect_fill(bases: np.ndarray, budget: float, iters: int = 200) -> np.ndarray:
    """``max(L - bases, 0)`` with ``L`` found by bisection so the sum is ``budget``."""
    bases = np.asarray(bases, dtype=float)
    if budget <= 0 or bases.size == 0:
        return np.zeros_like(bases)
    lo, hi = float(bases.min()), float(bases.max()) + budget
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(mid - bases, 0.0).sum() > budget:
            hi = mid
        else:
            lo = mid
    return np.maximum(0.5 * (lo + hi) - bases, 0.0)


def utility(etas: np.ndarray, y_ded: np.ndarray, y_sh: np.ndarray) -> float:
    return float(np.sum(np.log(1.0 + etas * (y_ded + y_sh))))


def block_ascent_slot(
    etas: np.ndarray,
    slice_of: np.ndarray,
    x_ded: tuple[float, ...],
    x_sh: float,
    rounds: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Alternate exact maximisation over each slice's dedicated block and the shared block."""
    etas = np.asarray(etas, dtype=float)
    slice_of = np.asarray(slice_of)
    y_ded = np.zeros_like(etas)
    y_sh = np.zeros_like(etas)
    for _ in range(rounds):
        for s, budget in enumerate(x_ded):
            idx = np.flatnonzero(slice_of == s)
            y_ded[idx] = bisect_fill(1.0 / etas[idx] + y_sh[idx], budget)
        y_sh = bisect_fill(1.0 / etas + y_ded, x_sh)
    return y_ded, y_sh


def sqp_utility(
    etas: np.ndarray,
    slice_of: np.ndarray,
    x_ded: tuple[float, ...],
    x_sh: float,
) -> float:
    """Optimal slot utility by SLSQP over one variable per (positive pool, member UE)."""
    etas = np.asarray(etas, dtype=float)
    slice_of = np.asarray(slice_of)
    blocks = [np.flatnonzero(slice_of == s) for s, b in enumerate(x_ded) if b > 0]
    budgets = [b for b in x_ded if b > 0]
    if x_sh > 0:
        blocks.append(np.arange(etas.size))
        budgets.append(x_sh)
    if not blocks:
        return 0.0
    ue = np.concatenate(blocks)
    block = np.repeat(np.arange(len(blocks)), [b.size for b in blocks])
    budget = np.asarray(budgets, dtype=float)
    a_eq = (block[None, :] == np.arange(len(blocks))[:, None]).astype(float)

    def objective(v: np.ndarray) -> tuple[float, np.ndarray]:
        z = np.zeros(etas.size)
        np.add.at(z, ue, v)
        rate = 1.0 + etas * z
        return -float(np.log(rate).sum()), -(etas / rate)[ue]

    x0 = budget[block] / np.bincount(block)[block]
    result = optimize.minimize(
        objective,
        x0,
        jac=True,
        method="SLSQP",
        bounds=list(zip(np.zeros(ue.size), budget[block])),
        constraints={"type": "eq", "fun": lambda v: a_eq @ v - budget, "jac": lambda v: a_eq},
        options={"ftol": 1e-15, "maxiter": 1000},
    )
    return -float(result.fun)
