"""Shared fixtures."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
import yaml

from hybrid_slicing.queueing.simulator import SlaSpec
from hybrid_slicing.samples import SampleSet


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def two_slice_samples() -> SampleSet:
    """2 slices of 2 UEs, K=2, T=6, moderate load."""
    gen = np.random.default_rng(7)
    shape = (4, 2, 6)
    return SampleSet(
        arrivals=gen.integers(0, 800, size=shape),
        etas=gen.uniform(1.0, 5.0, size=shape),
        slice_of=np.array([0, 0, 1, 1]),
    )


@pytest.fixture
def two_slice_sla() -> SlaSpec:
    return SlaSpec((2.0, 4.0))


@pytest.fixture
def tiny_samples() -> SampleSet:
    """2 slices of 2 UEs, K=1, T=2, as small as a model gets."""
    return SampleSet(
        arrivals=np.array([[[300, 200]], [[100, 400]], [[0, 250]], [[500, 0]]]),
        etas=np.array([[[2.0, 1.5]], [[1.0, 3.0]], [[4.0, 2.5]], [[0.8, 1.2]]]),
        slice_of=np.array([0, 0, 1, 1]),
    )


def write_config(path: Path, **overrides: object) -> Path:
    """Small two-slice scenario YAML; keyword arguments replace top-level keys."""
    data: dict[str, object] = {
        "name": "small",
        "horizon": 6,
        "samples": 3,
        "seeds": [0, 1],
        "slices": [
            {"name": "a", "ue_count": 2, "delay_budget_ms": 2,
             "traffic": {"alpha": 1.5, "target_load": 400}, "channel": {"profile": "pedestrian"}},
            {"name": "b", "ue_count": 2, "delay_budget_ms": 4,
             "traffic": {"alpha": 1.5, "target_load": 400}, "channel": {"profile": "urban"}},
        ],
        "search": {"grid_step": 1.0, "x_max": 30.0, "refinement_rounds": 1},
    }
    data.update(overrides)
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path


@pytest.fixture
def config_path(tmp_path: Path) -> Path:
    return write_config(tmp_path / "scenario.yaml")
