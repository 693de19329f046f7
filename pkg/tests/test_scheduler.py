"""Tests for the two-stage water-filling scheduler."""

import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybrid_slicing.scheduler.waterfilling import (
    Allocation,
    dedicated_level,
    kkt_residuals,
    max_throughput_slot,
    round_robin_slot,
    schedule_grid,
    schedule_slot,
    shared_level,
    slot_utility,
    water_height,
)
from oracles import block_ascent_slot, sqp_utility


def random_slot(
    rng: np.random.Generator,
    ues: int = 6,
    slices: int = 2,
    eta_range: tuple[float, float] = (0.3, 7.4),
    budget_range: tuple[float, float] = (0.5, 10.0),
):
    etas = rng.uniform(*eta_range, size=ues)
    slice_of = np.arange(ues) % slices
    allocation = Allocation(tuple(rng.uniform(*budget_range, size=slices)), rng.uniform(*budget_range))
    return etas, slice_of, allocation


@st.composite
def slots(draw):
    ues = draw(st.integers(min_value=1, max_value=8))
    slices = draw(st.integers(min_value=1, max_value=min(ues, 4)))
    etas = draw(st.lists(st.floats(0.1, 7.4), min_size=ues, max_size=ues))
    budgets = draw(
        st.lists(st.one_of(st.just(0.0), st.floats(0.0, 20.0)), min_size=slices + 1, max_size=slices + 1)
    )
    slice_of = np.arange(ues) % slices
    return np.array(etas), slice_of, Allocation(tuple(budgets[:-1]), budgets[-1])


class TestAllocation:
    """Test the outer-loop decision vector."""

    def test_vector_round_trip(self) -> None:
        """Test the [x_ded..., x_sh] layout."""
        allocation = Allocation.from_vector([3, 5, 2])
        assert allocation.x_ded == (3.0, 5.0)
        assert allocation.x_sh == 2.0
        assert allocation.total == 10.0
        np.testing.assert_array_equal(allocation.as_vector(), [3.0, 5.0, 2.0])

    def test_ceil_and_dominates(self) -> None:
        """Test rounding up and the componentwise order."""
        allocation = Allocation((1.2, 3.0), 0.25)
        assert allocation.ceil() == Allocation((2.0, 3.0), 1.0)
        assert allocation.ceil().dominates(allocation)
        assert not allocation.dominates(allocation.ceil())

    @pytest.mark.parametrize("vector", [[-1.0, 2.0], [1.0, math.inf], [math.nan, 1.0]])
    def test_rejects_bad_components(self, vector: list[float]) -> None:
        """Test that components must be finite and nonnegative."""
        with pytest.raises(ValueError):
            Allocation.from_vector(vector)

    def test_rejects_empty_vector(self) -> None:
        """Test that the shared component is required."""
        with pytest.raises(ValueError):
            Allocation.from_vector([])


class TestWaterHeight:
    """Test the exact water level."""

    def test_partial_fill(self) -> None:
        """Test a level that leaves the highest base dry."""
        assert float(water_height(np.array([1.0, 2.0, 3.0]), 3.0)) == pytest.approx(3.0)

    def test_zero_budget(self) -> None:
        """Test that an empty budget sits at the lowest base."""
        assert float(water_height(np.array([2.0, 1.0]), 0.0)) == 1.0

    def test_matches_bisection(self, rng: np.random.Generator) -> None:
        """Test the poured volume against the budget on random bases."""
        bases = rng.uniform(0.1, 5.0, size=(7, 4))
        budgets = rng.uniform(0.0, 10.0, size=4)
        level = water_height(bases, budgets)
        np.testing.assert_allclose(np.maximum(level - bases, 0.0).sum(axis=0), budgets, atol=1e-12)


class TestStages:
    """Test the two stages on hand-worked slots."""

    def test_dedicated_example(self) -> None:
        """Test beta = 0.8 and y = [0.75, 0.25] for etas [2, 1] and one PRB."""
        beta, y = dedicated_level([2.0, 1.0], 1.0)
        assert beta == pytest.approx(0.8)
        np.testing.assert_allclose(y, [0.75, 0.25])

    def test_equal_channels_split_evenly(self) -> None:
        """Test that identical UEs share the pool equally."""
        _, y = dedicated_level([1.0, 1.0, 1.0], 3.0)
        np.testing.assert_allclose(y, [1.0, 1.0, 1.0])

    def test_empty_dedicated_pool(self) -> None:
        """Test the infinite level of an empty pool."""
        beta, y = dedicated_level([2.0, 1.0], 0.0)
        assert beta == math.inf
        np.testing.assert_array_equal(y, [0.0, 0.0])

    def test_shared_example(self) -> None:
        """Test 1/nu = 1.75 and an even shared split on top of the dedicated fill."""
        nu, y = shared_level([2.0, 1.0], [0.75, 0.25], 1.0)
        assert 1.0 / nu == pytest.approx(1.75)
        np.testing.assert_allclose(y, [0.5, 0.5])

    def test_shared_single_ue(self) -> None:
        """Test that a lone UE takes the whole shared pool."""
        nu, y = shared_level([1.0], [0.0], 2.0)
        assert 1.0 / nu == pytest.approx(3.0)
        np.testing.assert_allclose(y, [2.0])

    def test_budget_without_ues(self) -> None:
        """Test that a pool with nobody to serve is refused."""
        with pytest.raises(ValueError):
            dedicated_level([], 1.0)
        with pytest.raises(ValueError):
            shared_level([], [], 1.0)

    def test_negative_budget(self) -> None:
        """Test the budget precondition."""
        with pytest.raises(ValueError):
            dedicated_level([1.0], -1.0)


class TestScheduleSlot:
    """Test the full slot schedule."""

    def test_hand_worked_slot(self) -> None:
        """Test both stages and the recovered multipliers together."""
        schedule = schedule_slot(Allocation((1.0,), 1.0), [2.0, 1.0], [0, 0])
        np.testing.assert_allclose(schedule.y_ded, [0.75, 0.25])
        np.testing.assert_allclose(schedule.y_sh, [0.5, 0.5])
        assert schedule.nu == pytest.approx(1.0 / 1.75)
        assert schedule.nu_dual == schedule.nu
        np.testing.assert_allclose(schedule.lam, [1.0 / 1.75])

    def test_all_pools_empty(self) -> None:
        """Test a zero allocation: no PRBs and infinite levels."""
        allocation = Allocation.zeros(2)
        schedule = schedule_slot(allocation, [1.0, 2.0, 3.0], [0, 1, 1])
        assert schedule.y_total.sum() == 0.0
        assert np.all(np.isinf(schedule.beta))
        assert schedule.nu == math.inf
        assert kkt_residuals(schedule, allocation, [1.0, 2.0, 3.0]).ok()

    def test_pure_shared_pool(self) -> None:
        """Test that with no dedicated PRBs the shared stage is plain water-filling."""
        etas = np.array([2.0, 1.0, 4.0, 0.5])
        schedule = schedule_slot(Allocation((0.0, 0.0), 3.0), etas, [0, 0, 1, 1])
        assert schedule.y_ded.sum() == 0.0
        _, y = shared_level(etas, np.zeros(4), 3.0)
        np.testing.assert_allclose(schedule.y_sh, y)

    def test_isolated_slices_decompose(self) -> None:
        """Test that without a shared pool the utility is the sum of per-slice fills."""
        etas = np.array([2.0, 1.0, 4.0, 0.5])
        schedule = schedule_slot(Allocation((1.0, 2.0), 0.0), etas, [0, 0, 1, 1])
        _, first = dedicated_level(etas[:2], 1.0)
        _, second = dedicated_level(etas[2:], 2.0)
        expected = slot_utility(etas[:2], first, 0.0) + slot_utility(etas[2:], second, 0.0)
        assert slot_utility(etas, schedule.y_ded, schedule.y_sh) == pytest.approx(expected)
        assert schedule.y_sh.sum() == 0.0

    def test_unknown_slice(self) -> None:
        """Test that every UE must belong to an allocated slice."""
        with pytest.raises(ValueError, match="slice"):
            schedule_slot(Allocation((1.0,), 1.0), [1.0, 1.0], [0, 1])

    def test_dedicated_budget_for_empty_slice(self) -> None:
        """Test that a slice without UEs cannot hold dedicated PRBs."""
        with pytest.raises(ValueError, match="no UEs"):
            schedule_slot(Allocation((1.0, 2.0), 0.0), [1.0, 1.0], [0, 0])

    def test_grid_matches_slots(self, two_slice_samples) -> None:
        """Test that the vectorised grid agrees with slot-by-slot scheduling."""
        allocation = Allocation((2.0, 3.0), 4.0)
        grid = schedule_grid(allocation, two_slice_samples.etas, two_slice_samples.slice_of)
        for k, t in [(0, 0), (1, 3), (1, 5)]:
            single = schedule_slot(allocation, two_slice_samples.etas[:, k, t], two_slice_samples.slice_of)
            np.testing.assert_allclose(grid.slot(k, t).y_ded, single.y_ded, atol=1e-12)
            np.testing.assert_allclose(grid.slot(k, t).y_sh, single.y_sh, atol=1e-12)


class TestKkt:
    """Test optimality of the schedule."""

    @settings(max_examples=200, deadline=None)
    @given(slot=slots())
    def test_residuals_vanish(self, slot) -> None:
        """Test every KKT family within 1e-8 on random slots."""
        etas, slice_of, allocation = slot
        schedule = schedule_slot(allocation, etas, slice_of)
        assert kkt_residuals(schedule, allocation, etas).max_violation <= 1e-8

    def test_grid_residuals_vanish(self, two_slice_samples) -> None:
        """Test the grid form of the residuals."""
        allocation = Allocation((1.5, 0.0), 2.5)
        grid = schedule_grid(allocation, two_slice_samples.etas, two_slice_samples.slice_of)
        assert kkt_residuals(grid, allocation, two_slice_samples.etas).ok()

    def test_perturbation_detected(self) -> None:
        """Test that moving PRBs off the optimum breaks stationarity."""
        allocation = Allocation((1.0,), 0.0)
        schedule = schedule_slot(allocation, [2.0, 1.0], [0, 0])
        moved = dataclasses.replace(schedule, y_ded=schedule.y_ded + np.array([-0.1, 0.1]))
        assert kkt_residuals(moved, allocation, [2.0, 1.0]).stationarity > 1e-3

    def test_shape_mismatch(self) -> None:
        """Test that the etas must match the schedule."""
        allocation = Allocation((1.0,), 0.0)
        schedule = schedule_slot(allocation, [2.0, 1.0], [0, 0])
        with pytest.raises(ValueError):
            kkt_residuals(schedule, allocation, [2.0])


class TestAgainstOracles:
    """Test water-filling against independent solvers and baselines."""

    @pytest.mark.parametrize("seed", range(5))
    def test_block_ascent_agrees(self, seed: int) -> None:
        """Test the per-UE split against block-coordinate ascent within 1e-6."""
        etas, slice_of, allocation = random_slot(np.random.default_rng(seed))
        schedule = schedule_slot(allocation, etas, slice_of)
        y_ded, y_sh = block_ascent_slot(etas, slice_of, allocation.x_ded, allocation.x_sh)
        np.testing.assert_allclose(schedule.y_ded, y_ded, atol=1e-6)
        np.testing.assert_allclose(schedule.y_sh, y_sh, atol=1e-6)

    def test_slsqp_agrees(self) -> None:
        """Test the slot utility against SLSQP on 1000 random slots of up to 8 UEs within 1e-6."""
        gen = np.random.default_rng(2024)
        for _ in range(1000):
            n_slices = int(gen.integers(2, 5))
            slice_of = np.repeat(np.arange(n_slices), gen.integers(1, 8 // n_slices + 1, size=n_slices))
            etas = gen.uniform(0.1, 7.4, size=slice_of.size)
            pools = gen.uniform(0.0, 20.0, size=n_slices + 1)
            pools[gen.random(n_slices + 1) < 0.1] = 0.0
            allocation = Allocation.from_vector(pools)
            schedule = schedule_slot(allocation, etas, slice_of)
            best = slot_utility(etas, schedule.y_ded, schedule.y_sh)
            reference = sqp_utility(etas, slice_of, allocation.x_ded, allocation.x_sh)
            assert best == pytest.approx(reference, abs=1e-6)

    @pytest.mark.parametrize("baseline", [max_throughput_slot, round_robin_slot])
    def test_baselines_never_win(self, rng: np.random.Generator, baseline) -> None:
        """Test that greedy and equal-share splits never exceed the optimum."""
        for _ in range(50):
            etas, slice_of, allocation = random_slot(rng)
            schedule = schedule_slot(allocation, etas, slice_of)
            y_ded, y_sh = baseline(allocation, etas, slice_of)
            assert slot_utility(etas, y_ded, y_sh) <= slot_utility(etas, schedule.y_ded, schedule.y_sh) + 1e-12

    def test_permutation_equivariant(self, rng: np.random.Generator) -> None:
        """Test that relabelling UEs relabels the schedule."""
        etas, slice_of, allocation = random_slot(rng, ues=7, slices=3)
        perm = rng.permutation(etas.size)
        base = schedule_slot(allocation, etas, slice_of)
        permuted = schedule_slot(allocation, etas[perm], slice_of[perm])
        np.testing.assert_allclose(permuted.y_ded, base.y_ded[perm], atol=1e-12)
        np.testing.assert_allclose(permuted.y_sh, base.y_sh[perm], atol=1e-12)


class TestLevelling:
    """Test the shape of the water-filling solution."""

    @settings(max_examples=200, deadline=None)
    @given(slot=slots(), data=st.data())
    def test_twins_get_the_same_prbs(self, slot, data) -> None:
        """Test that a copy of a UE in its own slice receives exactly what the original does."""
        etas, slice_of, allocation = slot
        twin = data.draw(st.integers(min_value=0, max_value=etas.size - 1))
        etas = np.append(etas, etas[twin])
        slice_of = np.append(slice_of, slice_of[twin])
        schedule = schedule_slot(allocation, etas, slice_of)
        assert schedule.y_ded[-1] == pytest.approx(schedule.y_ded[twin], abs=1e-12)
        assert schedule.y_sh[-1] == pytest.approx(schedule.y_sh[twin], abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(slot=slots())
    def test_dedicated_only_ues_share_a_height(self, slot) -> None:
        """Test one water height 1/eta + y_ded per slice among UEs served only from the dedicated pool."""
        etas, slice_of, allocation = slot
        schedule = schedule_slot(allocation, etas, slice_of)
        for s in range(len(allocation.x_ded)):
            members = (slice_of == s) & (schedule.y_ded > 0) & (schedule.y_sh == 0)
            heights = 1.0 / etas[members] + schedule.y_ded[members]
            if heights.size > 1:
                assert heights.max() - heights.min() <= 1e-8

    @settings(max_examples=300, deadline=None)
    @given(slot=slots(), data=st.data())
    def test_more_prbs_never_lower_a_share(self, slot, data) -> None:
        """Test that raising any single pool never reduces any UE's total PRBs."""
        etas, slice_of, allocation = slot
        vector = np.array(allocation.as_vector(), dtype=float)
        component = data.draw(st.integers(min_value=0, max_value=vector.size - 1))
        vector[component] += data.draw(st.floats(min_value=0.0, max_value=10.0))
        before = schedule_slot(allocation, etas, slice_of).y_total
        after = schedule_slot(Allocation.from_vector(vector), etas, slice_of).y_total
        assert np.all(after >= before - 1e-9)
