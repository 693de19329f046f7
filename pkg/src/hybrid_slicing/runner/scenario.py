"""Turn a scenario config into sample sets, one per seed."""

from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np

from hybrid_slicing.channel.model import load_se_traces, quantize_cqi, synthesize_se
from hybrid_slicing.queueing.simulator import SlaSpec
from hybrid_slicing.runner.config import ScenarioConfig, SliceConfig
from hybrid_slicing.samples import SampleSet
from hybrid_slicing.traffic.generator import generate_arrivals

logger = logging.getLogger(__name__)

SLICE_BUDGET_RANGE = (3.0, 11.0)
UES_PER_SLICE = 6


def _slice_etas(config: ScenarioConfig, slice_cfg: SliceConfig, seed: int, offset: int) -> np.ndarray:
    channel = slice_cfg.channel
    if channel.trace_path is not None:
        trace = load_se_traces(
            channel.trace_path, slice_cfg.ue_count, config.samples, config.horizon, config.eta_max
        )
    else:
        trace = synthesize_se(
            channel.profile or "mixed",
            slice_cfg.ue_count,
            config.samples,
            config.horizon,
            seed,
            eta_max=config.eta_max,
            ue_offset=offset,
        )
    values = trace.values
    return quantize_cqi(values, config.eta_max) if channel.quantize else values


def build_samples(config: ScenarioConfig, seed: int) -> SampleSet:
    """Arrivals and SE for every UE of the scenario under one master seed.

    UEs are numbered globally in slice order, so each slice draws its own
    streams even though all share the seed.
    """
    arrivals, etas, slice_of = [], [], []
    offset = 0
    for s, slice_cfg in enumerate(config.slices):
        trace = generate_arrivals(
            slice_cfg.traffic_specs(),
            slice_cfg.ue_count,
            config.samples,
            config.horizon,
            seed,
            ue_offset=offset,
        )
        arrivals.append(trace.bits)
        etas.append(_slice_etas(config, slice_cfg, seed, offset))
        slice_of.extend([s] * slice_cfg.ue_count)
        offset += slice_cfg.ue_count
    samples = SampleSet(np.concatenate(arrivals), np.concatenate(etas), np.asarray(slice_of))
    logger.debug(
        f"seed {seed}: {samples.ue_count} UEs, {int(samples.arrivals.sum())} bits offered"
    )
    return samples


def with_alpha(config: ScenarioConfig, alpha: float) -> ScenarioConfig:
    """Same scenario with every traffic law at tail index ``alpha``.

    Mean loads are kept, so only the burstiness changes.
    """
    data = config.model_dump()
    for slice_data in data["slices"]:
        slice_data["traffic"]["alpha"] = alpha
        slice_data["traffic"]["size_alpha"] = None
        for ue_data in slice_data["ue_traffic"] or []:
            ue_data["alpha"] = alpha
            ue_data["size_alpha"] = None
    return ScenarioConfig.model_validate(data)


def with_slice_count(
    config: ScenarioConfig,
    count: int,
    ues_per_slice: int = UES_PER_SLICE,
    budget_range: tuple[float, float] = SLICE_BUDGET_RANGE,
) -> ScenarioConfig:
    """``count`` copies of the first slice with budgets spread over ``budget_range``."""
    template = config.slices[0].model_dump()
    template["ue_count"] = ues_per_slice
    template["ue_traffic"] = None
    budgets = np.linspace(*budget_range, count)
    slices = [{**template, "name": f"slice{s + 1}", "delay_budget_ms": float(b)} for s, b in enumerate(budgets)]
    return ScenarioConfig.model_validate({**config.model_dump(), "slices": slices})


def burstiness_factory(config: ScenarioConfig, seed: int) -> Callable[[float], tuple[SampleSet, SlaSpec]]:
    """Sample-set factory for a sweep over the tail index."""

    def factory(alpha: float) -> tuple[SampleSet, SlaSpec]:
        scenario = with_alpha(config, alpha)
        return build_samples(scenario, seed), scenario.sla_spec()

    return factory


def slice_count_factory(config: ScenarioConfig, seed: int) -> Callable[[float], tuple[SampleSet, SlaSpec]]:
    """Sample-set factory for a sweep over the number of slices."""

    def factory(count: float) -> tuple[SampleSet, SlaSpec]:
        scenario = with_slice_count(config, int(count))
        return build_samples(scenario, seed), scenario.sla_spec()

    return factory
