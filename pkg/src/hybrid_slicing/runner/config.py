"""Scenario files: YAML parsed with pyyaml, validated with pydantic."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
    model_validator,
)

from hybrid_slicing.channel.model import DEFAULT_ETA_MAX
from hybrid_slicing.mip.builder import DEFAULT_EPSILON, DEFAULT_X_MAX
from hybrid_slicing.optimizer.search import SearchSpec
from hybrid_slicing.queueing.simulator import SlaMode, SlaSpec
from hybrid_slicing.traffic.generator import TrafficSpec

logger = logging.getLogger(__name__)

PROFILE_NAMES = ("pedestrian", "urban", "vehicular", "mixed")
HINT_CUTOFF = 60


class ConfigError(ValueError):
    """A scenario file failed to parse or validate.

    ``problems`` holds one ``<dotted.path>: <message>`` line per error.
    """

    def __init__(self, problems: list[str], source: str = "<config>") -> None:
        self.problems = problems
        self.source = source
        super().__init__(f"{source}: invalid configuration\n  " + "\n  ".join(problems))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TrafficConfig(_Strict):
    """Pareto gaps and sizes at a fixed mean load (bits per ms)."""

    alpha: float = Field(default=1.5, gt=1.0)
    target_load: float = Field(default=1000.0, gt=0.0)
    inter_arrival_scale: float = Field(default=0.5, gt=0.0)
    size_alpha: float | None = Field(default=None, gt=1.0)

    def to_spec(self) -> TrafficSpec:
        return TrafficSpec.normalized(
            self.alpha, self.target_load, self.inter_arrival_scale, self.size_alpha
        )


class ChannelConfig(_Strict):
    """A mobility profile or a dense SE trace file, not both."""

    profile: Literal["pedestrian", "urban", "vehicular", "mixed"] | None = None
    trace_path: Path | None = None
    quantize: bool = False

    @field_validator("trace_path")
    @classmethod
    def _resolve_trace(cls, value: Path | None, info: ValidationInfo) -> Path | None:
        if value is None:
            return None
        base = (info.context or {}).get("base_dir")
        path = value if value.is_absolute() or base is None else Path(base) / value
        if not path.is_file():
            raise ValueError(f"trace file {path} does not exist")
        return path

    @model_validator(mode="after")
    def _one_source(self) -> ChannelConfig:
        if self.profile is not None and self.trace_path is not None:
            raise ValueError("give either profile or trace_path, not both")
        if self.profile is None and self.trace_path is None:
            self.profile = "mixed"
        return self


class SliceConfig(_Strict):
    name: str | None = None
    ue_count: int = Field(ge=1)
    delay_budget_ms: float = Field(gt=0.0)
    traffic: TrafficConfig = Field(default_factory=TrafficConfig)
    ue_traffic: list[TrafficConfig] | None = None
    channel: ChannelConfig = Field(default_factory=ChannelConfig)

    @model_validator(mode="after")
    def _ue_traffic_length(self) -> SliceConfig:
        if self.ue_traffic is not None and len(self.ue_traffic) != self.ue_count:
            raise ValueError(
                f"ue_traffic has {len(self.ue_traffic)} entries for {self.ue_count} UEs"
            )
        return self

    def traffic_specs(self) -> list[TrafficSpec]:
        """One TrafficSpec per UE of the slice."""
        if self.ue_traffic is not None:
            return [t.to_spec() for t in self.ue_traffic]
        return [self.traffic.to_spec()] * self.ue_count


class SearchConfig(_Strict):
    grid_step: float = Field(default=1.0, gt=0.0)
    x_max: float = Field(default=DEFAULT_X_MAX, gt=0.0)
    refinement_rounds: int = Field(default=2, ge=0)


class MipConfig(_Strict):
    big_m: float | None = Field(default=None, gt=0.0)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)


class ScenarioConfig(_Strict):
    """Everything one experiment needs.

    ``horizon`` is T (slots of 1 ms per sample) and ``samples`` is K.
    """

    name: str = "scenario"
    slices: list[SliceConfig] = Field(min_length=1)
    horizon: int = Field(default=20, ge=1)
    samples: int = Field(default=20, ge=1)
    seeds: list[int] = Field(default_factory=lambda: list(range(10)), min_length=1)
    sla_mode: SlaMode = SlaMode.PER_UE
    eta_max: float = Field(default=DEFAULT_ETA_MAX, gt=0.0)
    search: SearchConfig = Field(default_factory=SearchConfig)
    mip: MipConfig = Field(default_factory=MipConfig)

    @field_validator("seeds")
    @classmethod
    def _nonnegative_seeds(cls, value: list[int]) -> list[int]:
        if any(seed < 0 for seed in value):
            raise ValueError("seeds must be nonnegative")
        return value

    @property
    def ue_count(self) -> int:
        return sum(s.ue_count for s in self.slices)

    def sla_spec(self) -> SlaSpec:
        return SlaSpec(tuple(s.delay_budget_ms for s in self.slices), self.sla_mode)

    def search_spec(self) -> SearchSpec:
        return SearchSpec(
            grid_step=self.search.grid_step,
            x_max=self.search.x_max,
            refinement_rounds=self.search.refinement_rounds,
        )


_MODELS: tuple[type[BaseModel], ...] = (
    ScenarioConfig, SliceConfig, TrafficConfig, ChannelConfig, SearchConfig, MipConfig,
)
_KNOWN_KEYS = sorted({name for model in _MODELS for name in model.model_fields})
_CHOICES = {
    "sla_mode": [m.value for m in SlaMode],
    "profile": list(PROFILE_NAMES),
}


def _did_you_mean(value: str, choices: list[str]) -> str:
    from thefuzz import process

    match = process.extractOne(value, choices, score_cutoff=HINT_CUTOFF)
    return f" (did you mean '{match[0]}'?)" if match else ""


def _describe(error: dict[str, Any]) -> str:
    path = ".".join(str(part) for part in error["loc"]) or "<root>"
    message = error["msg"]
    last = next((p for p in reversed(error["loc"]) if isinstance(p, str)), "")
    if error["type"] == "extra_forbidden":
        message = f"unknown key{_did_you_mean(str(last), _KNOWN_KEYS)}"
    elif error["type"] in ("enum", "literal_error") and isinstance(error.get("input"), str):
        message += _did_you_mean(error["input"], _CHOICES.get(last, []))
    return f"{path}: {message}"


def parse_config(
    data: Any, source: str = "<config>", base_dir: str | Path | None = None
) -> ScenarioConfig:
    """Validate an already-loaded mapping.

    Args:
        data: the mapping read from YAML
        source: name used in error messages
        base_dir: directory relative trace paths are resolved against
    """
    if not isinstance(data, dict):
        raise ConfigError([f"<root>: expected a mapping, got {type(data).__name__}"], source)
    try:
        return ScenarioConfig.model_validate(data, context={"base_dir": base_dir})
    except ValidationError as e:
        raise ConfigError([_describe(err) for err in e.errors()], source) from e


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a YAML scenario file."""
    config_path = Path(path)
    try:
        data = yaml.safe_load(config_path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError([f"<root>: not valid YAML ({e})"], str(config_path)) from e
    config = parse_config(data, str(config_path), config_path.parent)
    logger.info(
        f"Loaded {config.name}: {len(config.slices)} slices, {config.ue_count} UEs, "
        f"K={config.samples}, T={config.horizon}, {len(config.seeds)} seeds"
    )
    return config


def apply_overrides(config: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    """Copy of ``config`` with CLI overrides applied and re-validated.

    Recognised keys: ``seeds``, ``grid_step``, ``x_max``, ``big_m``,
    ``epsilon``; ``None`` values are ignored.
    """
    data = config.model_dump(mode="json")
    placement = {"grid_step": "search", "x_max": "search", "big_m": "mip", "epsilon": "mip"}
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "seeds":
            data["seeds"] = list(value)
        elif key in placement:
            data[placement[key]][key] = value
        else:
            raise ConfigError([f"{key}: not an overridable setting"])
    return parse_config(data, "<overrides>")


def dump_resolved(config: ScenarioConfig) -> str:
    """Every field with defaults filled, as YAML with sorted keys."""
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True, default_flow_style=False)
