"""Single-level MIP formulations of the outer problem.

The inner water-filling problem is replaced by its transformed KKT system:
reciprocal duals ``w = 1/lambda`` and ``mu = 1/nu`` turn the fractional
stationarity conditions into linear ones, and each remaining complementarity
product is linearised with a binary and a Big-M triple.

Variable names are a compatibility contract with external solvers:
``xded_s``, ``xsh``, ``yded_i_k_t``, ``ysh_i_k_t``, ``q_i_k_t``, ``s_i_k_t``,
``w_s_k_t``, ``mu_k_t``, ``zded_i_k_t``, ``zsh_i_k_t`` (all 0-based).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from hybrid_slicing.channel.model import N_SYM
from hybrid_slicing.queueing.simulator import SlaMode, SlaSpec, simulate
from hybrid_slicing.samples import DimensionError, SampleSet
from hybrid_slicing.scheduler.waterfilling import Allocation, schedule_grid

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6
DEFAULT_X_MAX = 100.0
BIG_M_HEADROOM_LIMIT = 0.99


class MissingVariableError(KeyError):
    """An assignment does not cover every variable of a model."""


class FormulationKind(Enum):
    """Which pools the outer problem may use."""

    HYRA = "hyra"
    DEDICATED_ONLY = "dedicated_only"
    SHARED_ONLY = "shared_only"

    @property
    def uses_dedicated(self) -> bool:
        return self is not FormulationKind.SHARED_ONLY

    @property
    def uses_shared(self) -> bool:
        return self is not FormulationKind.DEDICATED_ONLY


class Sense(Enum):
    LE = "<="
    GE = ">="
    EQ = "="


@dataclass(frozen=True)
class Variable:
    name: str
    lower: float = 0.0
    upper: float = math.inf
    binary: bool = False


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coef * var) <sense> rhs``.

    ``big_m_binary`` names the binary of a Big-M row; its coefficient in
    ``terms`` is +M or -M.
    """

    name: str
    family: str
    terms: tuple[tuple[str, float], ...]
    sense: Sense
    rhs: float
    big_m_binary: str | None = None

    def lhs(self, values: Mapping[str, float]) -> float:
        return math.fsum(coef * values[name] for name, coef in self.terms)

    def violation(self, values: Mapping[str, float]) -> float:
        gap = self.lhs(values) - self.rhs
        if self.sense is Sense.LE:
            return max(gap, 0.0)
        if self.sense is Sense.GE:
            return max(-gap, 0.0)
        return abs(gap)


@dataclass(frozen=True)
class MipDims:
    ue_count: int
    samples: int
    horizon: int
    slice_count: int


@dataclass(frozen=True)
class MipCounts:
    variables: int
    binaries: int
    constraints: int


@dataclass(frozen=True)
class MipModel:
    """An immutable mixed-integer model; minimise the sum of ``objective`` terms."""

    kind: FormulationKind
    dims: MipDims
    variables: tuple[Variable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: tuple[tuple[str, float], ...]
    big_m: float
    epsilon: float
    sla_mode: SlaMode = SlaMode.PER_UE
    _names: frozenset[str] = field(default=frozenset(), repr=False, compare=False)

    def __post_init__(self) -> None:
        names = frozenset(v.name for v in self.variables)
        if len(names) != len(self.variables):
            raise ValueError("duplicate variable names")
        for row in self.constraints:
            for name, _ in row.terms:
                if name not in names:
                    raise ValueError(f"constraint {row.name} references undeclared {name}")
        object.__setattr__(self, "_names", names)

    @property
    def variable_names(self) -> frozenset[str]:
        return self._names

    @property
    def binaries(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables if v.binary)

    @property
    def counts(self) -> MipCounts:
        return MipCounts(len(self.variables), len(self.binaries), len(self.constraints))

    def family_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.constraints:
            counts[row.family] = counts.get(row.family, 0) + 1
        return counts


def expected_counts(kind: FormulationKind, dims: MipDims, sla_mode: SlaMode = SlaMode.PER_UE) -> MipCounts:
    """Closed-form sizes of a formulation."""
    u, k, t, s = dims.ue_count, dims.samples, dims.horizon, dims.slice_count
    ukt = u * k * t
    n_sla = u if sla_mode is SlaMode.PER_UE else s
    queue_vars = u * k * (t + 1) + ukt  # q and s
    if kind is FormulationKind.HYRA:
        variables = s + 1 + 2 * ukt + queue_vars + s * k * t + k * t + 2 * ukt
        return MipCounts(variables, 2 * ukt, 10 * ukt + s * k * t + k * t + n_sla)
    if kind is FormulationKind.DEDICATED_ONLY:
        variables = s + ukt + queue_vars + s * k * t + ukt
        return MipCounts(variables, ukt, 6 * ukt + s * k * t + n_sla)
    variables = 1 + ukt + queue_vars + k * t + ukt
    return MipCounts(variables, ukt, 6 * ukt + k * t + n_sla)


def default_big_m(samples: SampleSet, epsilon: float = DEFAULT_EPSILON, x_total: float | None = None) -> float:
    """``10 * max(1 + eta * (X_total + 1/epsilon))``; X_total defaults to 100 PRBs per pool."""
    if x_total is None:
        x_total = DEFAULT_X_MAX * (samples.slice_count + 1)
    eta_max = float(samples.etas.max()) if samples.etas.size else 1.0
    return 10.0 * (1.0 + eta_max * (x_total + 1.0 / epsilon))


def _sla_coefficients(samples: SampleSet) -> np.ndarray:
    """Weight of each backlog slot in a UE's SAA delay, shape (U, K)."""
    totals = samples.arrivals.sum(axis=-1).astype(float)
    safe = np.where(totals > 0, totals, 1.0)
    return np.where(totals > 0, 1.0 / (samples.samples * safe), 0.0)


def build(
    kind: FormulationKind | str,
    samples: SampleSet,
    sla: SlaSpec,
    big_m: float | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> MipModel:
    """Assemble the formulation of ``kind`` over a sample set.

    Args:
        kind: hyra, dedicated_only or shared_only
        samples: arrivals A, SE eta and slice membership
        sla: delay budgets and their mode
        big_m: Big-M constant; computed from the instance when omitted
        epsilon: lower bound standing in for the strict ``w, mu > 0``
    """
    kind = FormulationKind(kind)
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if big_m is None:
        big_m = default_big_m(samples, epsilon)
    if big_m <= 0:
        raise ValueError(f"big_m must be positive, got {big_m}")

    n_ue, n_k, n_t = samples.ue_count, samples.samples, samples.horizon
    n_s = max(samples.slice_count, len(sla.budgets))
    members = [samples.members(s) for s in range(n_s)]
    for s, idx in enumerate(members):
        if idx.size == 0:
            raise DimensionError(f"slice {s} has no UEs")
    slice_of = samples.slice_of
    eta = samples.etas
    arrivals = samples.arrivals
    ded, sh = kind.uses_dedicated, kind.uses_shared
    if kind is FormulationKind.DEDICATED_ONLY:
        logger.info(
            "dedicated-only model: dropping the lower activation row on y_sh and mu, "
            "neither exists without a shared pool"
        )

    ukt = [(i, k, t) for i in range(n_ue) for k in range(n_k) for t in range(n_t)]
    variables: list[Variable] = []
    if ded:
        variables += [Variable(f"xded_{s}") for s in range(n_s)]
    if sh:
        variables.append(Variable("xsh"))
    if ded:
        variables += [Variable(f"yded_{i}_{k}_{t}") for i, k, t in ukt]
    if sh:
        variables += [Variable(f"ysh_{i}_{k}_{t}") for i, k, t in ukt]
    variables += [
        Variable(f"q_{i}_{k}_{t}", upper=0.0 if t == 0 else math.inf)
        for i in range(n_ue)
        for k in range(n_k)
        for t in range(n_t + 1)
    ]
    variables += [Variable(f"s_{i}_{k}_{t}") for i, k, t in ukt]
    if ded:
        variables += [
            Variable(f"w_{s}_{k}_{t}", lower=epsilon)
            for s in range(n_s)
            for k in range(n_k)
            for t in range(n_t)
        ]
    if sh:
        variables += [Variable(f"mu_{k}_{t}", lower=epsilon) for k in range(n_k) for t in range(n_t)]
    if ded:
        variables += [Variable(f"zded_{i}_{k}_{t}", upper=1.0, binary=True) for i, k, t in ukt]
    if sh:
        variables += [Variable(f"zsh_{i}_{k}_{t}", upper=1.0, binary=True) for i, k, t in ukt]

    rows: list[LinearConstraint] = []

    def y_terms(i: int, k: int, t: int, scale: float) -> list[tuple[str, float]]:
        terms = []
        if ded:
            terms.append((f"yded_{i}_{k}_{t}", scale))
        if sh:
            terms.append((f"ysh_{i}_{k}_{t}", scale))
        return terms

    for i, k, t in ukt:
        rows.append(LinearConstraint(
            f"cap_{i}_{k}_{t}", "capacity",
            ((f"s_{i}_{k}_{t}", 1.0), *y_terms(i, k, t, -N_SYM * eta[i, k, t])),
            Sense.LE, 0.0,
        ))
    for i, k, t in ukt:
        rows.append(LinearConstraint(
            f"queue_{i}_{k}_{t}", "queue",
            ((f"q_{i}_{k}_{t}", 1.0), (f"s_{i}_{k}_{t}", -1.0), (f"q_{i}_{k}_{t + 1}", -1.0)),
            Sense.LE, -float(arrivals[i, k, t]),
        ))

    coef = _sla_coefficients(samples)
    if sla.mode is SlaMode.PER_UE:
        limits = sla.ue_limits(slice_of)
        for i in range(n_ue):
            terms = tuple(
                (f"q_{i}_{k}_{t}", float(coef[i, k])) for k in range(n_k) for t in range(n_t)
            )
            rows.append(LinearConstraint(f"sla_{i}", "sla", terms, Sense.LE, float(limits[i])))
    else:
        for s, idx in enumerate(members):
            terms = tuple(
                (f"q_{i}_{k}_{t}", float(coef[i, k]) / idx.size)
                for i in idx
                for k in range(n_k)
                for t in range(n_t)
            )
            rows.append(LinearConstraint(f"sla_{s}", "sla", terms, Sense.LE, sla.budgets[s]))

    if ded:
        for s, idx in enumerate(members):
            for k in range(n_k):
                for t in range(n_t):
                    terms = tuple((f"yded_{i}_{k}_{t}", 1.0) for i in idx) + ((f"xded_{s}", -1.0),)
                    rows.append(LinearConstraint(f"bded_{s}_{k}_{t}", "budget_ded", terms, Sense.EQ, 0.0))
    if sh:
        for k in range(n_k):
            for t in range(n_t):
                terms = tuple((f"ysh_{i}_{k}_{t}", 1.0) for i in range(n_ue)) + (("xsh", -1.0),)
                rows.append(LinearConstraint(f"bsh_{k}_{t}", "budget_sh", terms, Sense.EQ, 0.0))

    pools = []
    if ded:
        pools.append(("ded", "stationarity_ded", lambda i, k, t: f"w_{slice_of[i]}_{k}_{t}"))
    if sh:
        pools.append(("sh", "stationarity_sh", lambda i, k, t: f"mu_{k}_{t}"))

    for pool, family, dual_of in pools:
        for i, k, t in ukt:
            e = float(eta[i, k, t])
            rows.append(LinearConstraint(
                f"stat{pool}_{i}_{k}_{t}", family,
                (*y_terms(i, k, t, e), (dual_of(i, k, t), -e)),
                Sense.GE, -1.0,
            ))
    for pool, _, dual_of in pools:
        for i, k, t in ukt:
            e = float(eta[i, k, t])
            z = f"z{pool}_{i}_{k}_{t}"
            dual = dual_of(i, k, t)
            rows.append(LinearConstraint(
                f"act{pool}_{i}_{k}_{t}", f"bigm_{pool}_activity",
                ((f"y{pool}_{i}_{k}_{t}", 1.0), (z, -big_m)),
                Sense.LE, 0.0, big_m_binary=z,
            ))
            rows.append(LinearConstraint(
                f"up{pool}_{i}_{k}_{t}", f"bigm_{pool}_upper",
                (*y_terms(i, k, t, e), (dual, -e), (z, big_m)),
                Sense.LE, big_m - 1.0, big_m_binary=z,
            ))
            rows.append(LinearConstraint(
                f"lo{pool}_{i}_{k}_{t}", f"bigm_{pool}_lower",
                (*y_terms(i, k, t, -e), (dual, e), (z, big_m)),
                Sense.LE, big_m + 1.0, big_m_binary=z,
            ))

    objective = []
    if ded:
        objective += [(f"xded_{s}", 1.0) for s in range(n_s)]
    if sh:
        objective.append(("xsh", 1.0))

    model = MipModel(
        kind=kind,
        dims=MipDims(n_ue, n_k, n_t, n_s),
        variables=tuple(variables),
        constraints=tuple(rows),
        objective=tuple(objective),
        big_m=float(big_m),
        epsilon=float(epsilon),
        sla_mode=sla.mode,
    )
    logger.debug(
        f"Built {kind.value} model: {model.counts.variables} variables, "
        f"{model.counts.binaries} binaries, {model.counts.constraints} rows"
    )
    return model


@dataclass(frozen=True)
class SolutionReport:
    """Worst violation per constraint family, plus bounds and integrality."""

    family_violations: dict[str, float]
    bound_violation: float
    integrality_violation: float
    objective: float

    @property
    def max_violation(self) -> float:
        return max([self.bound_violation, self.integrality_violation, *self.family_violations.values()])

    def ok(self, tol: float = 1e-6) -> bool:
        return self.max_violation <= tol

    def violated(self, tol: float = 1e-6) -> list[str]:
        """Families whose worst row exceeds ``tol``."""
        return [name for name, value in self.family_violations.items() if value > tol]


def _require(model: MipModel, assignment: Mapping[str, float]) -> None:
    missing = sorted(model.variable_names - set(assignment))
    if missing:
        preview = ", ".join(missing[:5])
        raise MissingVariableError(f"{len(missing)} variables without a value: {preview}")


def check_solution(model: MipModel, assignment: Mapping[str, float], tol: float = 1e-6) -> SolutionReport:
    """Evaluate every row of ``model`` at ``assignment``."""
    _require(model, assignment)
    families: dict[str, float] = {}
    for row in model.constraints:
        families[row.family] = max(families.get(row.family, 0.0), row.violation(assignment))

    bounds = 0.0
    integrality = 0.0
    for var in model.variables:
        value = float(assignment[var.name])
        bounds = max(bounds, var.lower - value, value - var.upper)
        if var.binary:
            integrality = max(integrality, min(abs(value), abs(value - 1.0)))
    objective = math.fsum(coef * assignment[name] for name, coef in model.objective)
    report = SolutionReport(families, max(bounds, 0.0), integrality, objective)
    if not report.ok(tol):
        logger.debug(f"Assignment violates {report.violated(tol)} (worst {report.max_violation:.3e})")
    return report


def lift_assignment(model: MipModel, allocation: Allocation, samples: SampleSet) -> dict[str, float]:
    """Full variable assignment for the point an allocation induces.

    y comes from water-filling, S and Q from work-conserving queues,
    ``w = 1/lambda`` and ``mu = 1/nu`` from the recovered multipliers and each
    binary marks whether its PRB variable is positive.
    """
    if not model.kind.uses_shared and allocation.x_sh > 0:
        raise ValueError("a dedicated-only model cannot take a shared pool")
    if not model.kind.uses_dedicated and any(v > 0 for v in allocation.x_ded):
        raise ValueError("a shared-only model cannot take dedicated pools")
    if allocation.slice_count != model.dims.slice_count:
        raise DimensionError(
            f"allocation has {allocation.slice_count} slices, model {model.dims.slice_count}"
        )

    schedule = schedule_grid(allocation, samples.etas, samples.slice_of)
    state, _ = simulate(allocation, samples, schedule)

    values: dict[str, float] = {"xsh": allocation.x_sh}
    for s, x in enumerate(allocation.x_ded):
        values[f"xded_{s}"] = x
    for (i, k, t), y in np.ndenumerate(schedule.y_ded):
        values[f"yded_{i}_{k}_{t}"] = float(y)
        values[f"zded_{i}_{k}_{t}"] = 1.0 if y > 0 else 0.0
    for (i, k, t), y in np.ndenumerate(schedule.y_sh):
        values[f"ysh_{i}_{k}_{t}"] = float(y)
        values[f"zsh_{i}_{k}_{t}"] = 1.0 if y > 0 else 0.0
    for (i, k, t), q in np.ndenumerate(state.queue):
        values[f"q_{i}_{k}_{t}"] = float(q)
    for (i, k, t), served in np.ndenumerate(state.served):
        values[f"s_{i}_{k}_{t}"] = float(served)
    for (s, k, t), lam in np.ndenumerate(schedule.lam):
        values[f"w_{s}_{k}_{t}"] = 1.0 / float(lam)
    for (k, t), nu in np.ndenumerate(schedule.nu_dual):
        values[f"mu_{k}_{t}"] = 1.0 / float(nu)
    return {v.name: values[v.name] for v in model.variables}


def big_m_headroom(model: MipModel, assignment: Mapping[str, float]) -> float:
    """Largest share of M a relaxed Big-M row actually uses.

    For each Big-M row whose binary sits at the value that switches the row
    off, the share is how far the non-M part reaches past the row's tight
    form, divided by M. Values near 1 mean M is barely large enough.
    """
    _require(model, assignment)
    worst = 0.0
    for row in model.constraints:
        if row.big_m_binary is None:
            continue
        z_coef = dict(row.terms)[row.big_m_binary]
        relaxing = 1.0 if z_coef < 0 else 0.0
        if round(assignment[row.big_m_binary]) != relaxing:
            continue
        rest = math.fsum(
            coef * assignment[name] for name, coef in row.terms if name != row.big_m_binary
        )
        tight_rhs = row.rhs - z_coef * (1.0 - relaxing)
        worst = max(worst, (rest - tight_rhs) / model.big_m)
    return worst
