"""Single-level MIP formulations, LP export and consistency checks."""

from hybrid_slicing.mip.builder import (
    BIG_M_HEADROOM_LIMIT,
    FormulationKind,
    LinearConstraint,
    MipCounts,
    MipDims,
    MipModel,
    MissingVariableError,
    Sense,
    SolutionReport,
    Variable,
    big_m_headroom,
    build,
    check_solution,
    default_big_m,
    expected_counts,
    lift_assignment,
)
from hybrid_slicing.mip.equivalence import (
    EquivalenceReport,
    kkt_set_residual,
    solve_kkt_point,
    transformed_set_residual,
    verify_transform_equivalence,
)
from hybrid_slicing.mip.lp_format import LpFormatError, ParsedLp, export_lp, parse_lp, render_lp

__all__ = [
    "BIG_M_HEADROOM_LIMIT",
    "EquivalenceReport",
    "FormulationKind",
    "LinearConstraint",
    "LpFormatError",
    "MipCounts",
    "MipDims",
    "MipModel",
    "MissingVariableError",
    "ParsedLp",
    "Sense",
    "SolutionReport",
    "Variable",
    "big_m_headroom",
    "build",
    "check_solution",
    "default_big_m",
    "expected_counts",
    "export_lp",
    "kkt_set_residual",
    "lift_assignment",
    "parse_lp",
    "render_lp",
    "solve_kkt_point",
    "transformed_set_residual",
    "verify_transform_equivalence",
]
