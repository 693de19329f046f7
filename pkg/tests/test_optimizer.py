"""Tests for the allocation search and the strategy comparison."""

import math

import numpy as np
import pandas as pd
import pytest

from hybrid_slicing.mip.builder import FormulationKind
from hybrid_slicing.optimizer.experiments import (
    MODE_ORDER,
    burstiness_sweep,
    compare_strategies,
    savings,
    slice_count_sweep,
    sweep,
)
from hybrid_slicing.optimizer.search import (
    FeasibilityOracle,
    SearchSpec,
    bisect_shared_total,
    free_components,
    minimize_allocation,
)
from hybrid_slicing.queueing.simulator import SlaSpec
from hybrid_slicing.samples import SampleSet
from hybrid_slicing.scheduler.waterfilling import Allocation

SPEC = SearchSpec(grid_step=1.0, x_max=30.0, refinement_rounds=2)


def random_samples(seed: int) -> SampleSet:
    gen = np.random.default_rng(seed)
    shape = (4, 2, 5)
    return SampleSet(
        arrivals=gen.integers(0, 700, size=shape),
        etas=gen.uniform(0.8, 5.0, size=shape),
        slice_of=np.array([0, 0, 1, 1]),
    )


class TotalThresholdOracle(FeasibilityOracle):
    """Feasible exactly when the allocation holds at least ``threshold`` PRBs."""

    def __init__(self, samples: SampleSet, sla: SlaSpec, threshold: float) -> None:
        super().__init__(samples, sla)
        self.threshold = threshold

    def evaluate(self, vector) -> bool:
        return math.fsum(vector) >= self.threshold


class TestSearchSpec:
    """Test search settings."""

    def test_final_step(self) -> None:
        """Test that each refinement round halves the step."""
        assert SearchSpec(1.0, 10.0, 2).final_step == 0.25
        assert SearchSpec(2.0, 10.0, 0).final_step == 2.0

    def test_mode_by_value(self) -> None:
        """Test that the mode may be given by name and swapped."""
        spec = SearchSpec(mode="shared_only")
        assert spec.mode is FormulationKind.SHARED_ONLY
        assert spec.with_mode(FormulationKind.HYRA).grid_step == spec.grid_step

    @pytest.mark.parametrize(
        "kwargs", [{"grid_step": 0.0}, {"grid_step": 2.0, "x_max": 1.0}, {"refinement_rounds": -1}]
    )
    def test_rejects_bad_settings(self, kwargs: dict) -> None:
        """Test the bounds on the settings."""
        with pytest.raises(ValueError):
            SearchSpec(**kwargs)

    @pytest.mark.parametrize(
        "mode, expected",
        [
            (FormulationKind.HYRA, [0, 1, 2]),
            (FormulationKind.DEDICATED_ONLY, [0, 1]),
            (FormulationKind.SHARED_ONLY, [2]),
        ],
    )
    def test_free_components(self, mode: FormulationKind, expected: list[int]) -> None:
        """Test which components each strategy may move."""
        assert free_components(mode, 2) == expected


class TestMinimizeAllocation:
    """Test the grid-then-refine search."""

    def test_zero_traffic(self) -> None:
        """Test that no demand needs no PRBs."""
        samples = SampleSet(np.zeros((2, 1, 3), dtype=int), np.ones((2, 1, 3)), np.array([0, 1]))
        result = minimize_allocation(SearchSpec(1.0, 5.0, 1), samples, SlaSpec((1.0, 1.0)))
        assert result.feasible
        assert result.total_prbs == 0.0
        assert result.best_relaxed == Allocation.zeros(2)

    def test_shared_only_matches_linear_scan(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that the shared-only optimum is the smallest feasible pool on the refined grid."""
        spec = SPEC.with_mode(FormulationKind.SHARED_ONLY)
        result = minimize_allocation(spec, two_slice_samples, two_slice_sla)
        oracle = FeasibilityOracle(two_slice_samples, two_slice_sla)
        scan = next(x for x in np.arange(0.0, 30.0 + 1e-9, spec.final_step) if oracle.evaluate([0.0, 0.0, x]))
        assert result.best_relaxed == Allocation((0.0, 0.0), float(scan))

    def test_shared_only_matches_bisection(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test agreement with continuous bisection within one refined step."""
        result = minimize_allocation(SPEC.with_mode("shared_only"), two_slice_samples, two_slice_sla)
        bisected = bisect_shared_total(two_slice_samples, two_slice_sla, x_max=30.0)
        assert bisected is not None
        assert bisected <= result.relaxed_total + 1e-3
        assert result.relaxed_total - bisected <= SPEC.final_step + 1e-3

    def test_ceiling_and_feasibility(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that the deployed allocation rounds every component up and meets the SLA."""
        result = minimize_allocation(SPEC, two_slice_samples, two_slice_sla)
        relaxed, best = result.best_relaxed, result.best
        assert best.dominates(relaxed)
        assert all(float(v).is_integer() for v in best.as_vector())
        assert 0.0 <= best.total - relaxed.total < relaxed.slice_count + 1
        assert FeasibilityOracle(two_slice_samples, two_slice_sla).evaluate(best.as_vector())
        assert FeasibilityOracle(two_slice_samples, two_slice_sla).evaluate(relaxed.as_vector())

    def test_pool_restrictions(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that each baseline keeps the other pool empty."""
        dedicated = minimize_allocation(SPEC.with_mode("dedicated_only"), two_slice_samples, two_slice_sla)
        assert dedicated.best_relaxed.x_sh == 0.0
        shared = minimize_allocation(SPEC.with_mode("shared_only"), two_slice_samples, two_slice_sla)
        assert shared.best_relaxed.x_ded == (0.0, 0.0)

    def test_infeasible_at_cap(self) -> None:
        """Test that an unreachable SLA is reported rather than raised."""
        flooded = SampleSet(np.full((2, 1, 4), 5000), np.ones((2, 1, 4)), np.array([0, 1]))
        result = minimize_allocation(SearchSpec(1.0, 1.0, 0), flooded, SlaSpec((0.5, 0.5)))
        assert not result.feasible
        assert result.best is None and result.best_relaxed is None
        assert math.isnan(result.total_prbs)

    def test_warm_start_respects_mode(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that a warm start may not use excluded pools."""
        with pytest.raises(ValueError, match="warm start"):
            minimize_allocation(
                SPEC.with_mode("shared_only"),
                two_slice_samples,
                two_slice_sla,
                warm_start=[Allocation((1.0, 0.0), 5.0)],
            )

    def test_warm_start_never_hurts(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that seeding the incumbent cannot worsen the optimum."""
        cold = minimize_allocation(SPEC, two_slice_samples, two_slice_sla)
        warm = minimize_allocation(
            SPEC, two_slice_samples, two_slice_sla, warm_start=[None, Allocation((30.0, 30.0), 30.0)]
        )
        assert warm.relaxed_total <= cold.relaxed_total + SPEC.final_step

    def test_pruning_is_sound(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that every pruned verdict agrees with a fresh simulation."""
        oracle = FeasibilityOracle(two_slice_samples, two_slice_sla)
        result = minimize_allocation(SPEC, two_slice_samples, two_slice_sla, oracle=oracle)
        assert result.pruned > 0
        assert oracle.audit_pruned(fraction=1.0) == []

    def test_oracle_vector_length(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that the cache only takes full allocation vectors."""
        with pytest.raises(ValueError):
            FeasibilityOracle(two_slice_samples, two_slice_sla)([1.0, 2.0])

    @pytest.mark.parametrize(
        "mode, warm, expected",
        [
            ("hyra", None, (0.0, 0.0, 4.0)),
            ("hyra", Allocation((2.0, 2.0), 0.0), (0.0, 0.0, 4.0)),
            ("hyra", Allocation((1.0, 0.0), 3.0), (0.0, 0.0, 4.0)),
            ("dedicated_only", Allocation((4.0, 0.0), 0.0), (0.0, 4.0, 0.0)),
        ],
    )
    def test_ties_break_lexicographically(
        self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec, mode: str, warm, expected: tuple
    ) -> None:
        """Test that among equal totals the smallest vector wins, whatever the warm start."""
        oracle = TotalThresholdOracle(two_slice_samples, two_slice_sla, threshold=4.0)
        spec = SearchSpec(grid_step=1.0, x_max=6.0, refinement_rounds=1, mode=mode)
        result = minimize_allocation(spec, two_slice_samples, two_slice_sla, warm_start=[warm], oracle=oracle)
        assert result.best_relaxed.as_vector().tolist() == list(expected)


class TestCompareStrategies:
    """Test the three-way comparison."""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_hybrid_never_worse(self, seed: int) -> None:
        """Test that HyRA needs no more PRBs than either pure strategy."""
        comparison = compare_strategies(random_samples(seed), SlaSpec((2.0, 5.0)), SPEC)
        hyra = comparison[FormulationKind.HYRA].relaxed_total
        assert hyra <= comparison[FormulationKind.DEDICATED_ONLY].relaxed_total + 1e-9
        assert hyra <= comparison[FormulationKind.SHARED_ONLY].relaxed_total + 1e-9
        assert comparison.savings >= 0.0

    def test_frame_layout(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test the comparison table columns and row order."""
        frame = compare_strategies(two_slice_samples, two_slice_sla, SPEC).to_frame()
        assert list(frame.columns) == [
            "mode", "x_ded_1", "x_ded_2", "x_sh", "total", "relaxed_total", "feasible", "evals",
        ]
        assert frame["mode"].tolist() == [mode.value for mode in MODE_ORDER]
        assert frame["feasible"].all()

    def test_deterministic(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test that repeated comparisons give identical tables."""
        first = compare_strategies(two_slice_samples, two_slice_sla, SPEC).to_frame()
        second = compare_strategies(two_slice_samples, two_slice_sla, SPEC).to_frame()
        pd.testing.assert_frame_equal(first, second)

    @pytest.mark.parametrize(
        "hyra, dedicated, shared, expected",
        [(80.0, 100.0, 100.0, 0.2), (6.0, 8.0, 4.0, 0.0), (0.0, 0.0, 0.0, 0.0)],
    )
    def test_savings(self, hyra: float, dedicated: float, shared: float, expected: float) -> None:
        """Test savings against the mean of the two baselines."""
        assert savings(hyra, dedicated, shared) == pytest.approx(expected)

    def test_savings_nan(self) -> None:
        """Test that a failed baseline leaves savings undefined."""
        assert math.isnan(savings(1.0, math.nan, 2.0))


class TestSweeps:
    """Test parameter sweeps."""

    def test_one_row_per_value(self, two_slice_samples: SampleSet, two_slice_sla: SlaSpec) -> None:
        """Test the sweep table shape and label column."""
        frame = sweep([1, 2], lambda _: (two_slice_samples, two_slice_sla), SPEC, label="run")
        assert frame.columns.tolist() == ["run", "hyra", "dedicated_only", "shared_only", "savings"]
        assert frame["run"].tolist() == [1, 2]
        assert frame["hyra"].iloc[0] == frame["hyra"].iloc[1]

    @pytest.mark.parametrize("alpha", [1.0, 2.6])
    def test_burstiness_range(self, alpha: float) -> None:
        """Test that tail indices outside (1, 2.5] are refused."""
        with pytest.raises(ValueError, match="alpha"):
            burstiness_sweep([1.5, alpha], lambda _: None, SPEC)

    def test_slice_count_range(self) -> None:
        """Test that sweeps need at least one slice."""
        with pytest.raises(ValueError):
            slice_count_sweep([0], lambda _: None, SPEC)
