"""Tests for scenario configuration."""

from pathlib import Path

import pytest
import yaml

from conftest import write_config
from hybrid_slicing.channel.model import synthesize_se, write_se_csv
from hybrid_slicing.queueing.simulator import SlaMode
from hybrid_slicing.runner.config import (
    ConfigError,
    ScenarioConfig,
    apply_overrides,
    dump_resolved,
    load_config,
    parse_config,
)

MINIMAL = {"slices": [{"ue_count": 2, "delay_budget_ms": 3}]}


def slice_with(**fields) -> dict:
    return {"slices": [{"ue_count": 2, "delay_budget_ms": 3, **fields}]}


class TestDefaults:
    """Test the filled-in defaults."""

    def test_minimal_config(self) -> None:
        """Test that one slice is enough and everything else defaults."""
        config = parse_config(MINIMAL)
        assert config.horizon == 20
        assert config.samples == 20
        assert config.seeds == list(range(10))
        assert config.sla_mode is SlaMode.PER_UE
        assert config.search.grid_step == 1.0
        assert config.search.x_max == 100.0
        assert config.mip.big_m is None
        assert config.slices[0].channel.profile == "mixed"
        assert config.slices[0].traffic.alpha == 1.5

    def test_derived_specs(self) -> None:
        """Test the SLA, search and traffic specs built from a config."""
        data = slice_with(traffic={"alpha": 1.8, "target_load": 250})
        config = parse_config({**data, "sla_mode": "slice_aggregated"})
        sla = config.sla_spec()
        assert sla.budgets == (3.0,)
        assert sla.mode is SlaMode.SLICE_AGGREGATED
        assert config.search_spec().final_step == 0.25
        specs = config.slices[0].traffic_specs()
        assert len(specs) == 2
        assert specs[0].mean_load == pytest.approx(250.0)

    def test_per_ue_traffic(self) -> None:
        """Test that ue_traffic gives each UE its own law."""
        config = parse_config(slice_with(ue_traffic=[{"target_load": 100}, {"target_load": 900}]))
        loads = [spec.mean_load for spec in config.slices[0].traffic_specs()]
        assert loads == pytest.approx([100.0, 900.0])

    def test_load_file(self, config_path: Path) -> None:
        """Test reading a YAML scenario from disk."""
        config = load_config(config_path)
        assert config.name == "small"
        assert config.ue_count == 4
        assert [s.channel.profile for s in config.slices] == ["pedestrian", "urban"]


class TestValidation:
    """Test error reporting."""

    def test_unknown_key_hint(self) -> None:
        """Test that a misspelt top-level key gets a suggestion."""
        with pytest.raises(ConfigError) as excinfo:
            parse_config({**MINIMAL, "horizn": 5})
        assert "horizn: unknown key (did you mean 'horizon'?)" in excinfo.value.problems

    def test_nested_unknown_key_path(self) -> None:
        """Test the dotted path of a nested error."""
        with pytest.raises(ConfigError) as excinfo:
            parse_config(slice_with(traffic={"alpah": 1.5}))
        assert excinfo.value.problems == ["slices.0.traffic.alpah: unknown key (did you mean 'alpha'?)"]

    def test_enum_hint(self) -> None:
        """Test that a misspelt SLA mode names the closest choice."""
        with pytest.raises(ConfigError, match="did you mean 'per_ue'"):
            parse_config({**MINIMAL, "sla_mode": "per_eu"})

    def test_profile_hint(self) -> None:
        """Test that a misspelt mobility profile names the closest choice."""
        with pytest.raises(ConfigError, match="did you mean 'pedestrian'"):
            parse_config(slice_with(channel={"profile": "pedestrain"}))

    @pytest.mark.parametrize(
        "data, fragment",
        [
            ({"slices": []}, "slices"),
            ({"slices": [{"ue_count": 0, "delay_budget_ms": 3}]}, "slices.0.ue_count"),
            ({"slices": [{"ue_count": 1, "delay_budget_ms": -1}]}, "slices.0.delay_budget_ms"),
            ({**MINIMAL, "horizon": 0}, "horizon"),
            ({**MINIMAL, "seeds": [1, -2]}, "seeds must be nonnegative"),
            (slice_with(traffic={"alpha": 1.0}), "slices.0.traffic.alpha"),
            (slice_with(ue_traffic=[{}]), "ue_traffic has 1 entries for 2 UEs"),
        ],
    )
    def test_field_errors(self, data: dict, fragment: str) -> None:
        """Test that each constraint is reported with its location."""
        with pytest.raises(ConfigError) as excinfo:
            parse_config(data, source="scenario.yaml")
        message = str(excinfo.value)
        assert message.startswith("scenario.yaml: invalid configuration")
        assert fragment in message

    def test_both_channel_sources(self, tmp_path: Path) -> None:
        """Test that a slice takes a profile or a trace, not both."""
        trace = write_se_csv(synthesize_se("urban", 2, 1, 1, seed=0), tmp_path / "se.csv")
        with pytest.raises(ConfigError, match="either profile or trace_path"):
            parse_config(slice_with(channel={"profile": "urban", "trace_path": str(trace)}))

    def test_not_a_mapping(self) -> None:
        """Test that the document root must be a mapping."""
        with pytest.raises(ConfigError, match="expected a mapping"):
            parse_config(["slices"])

    def test_invalid_yaml(self, tmp_path: Path) -> None:
        """Test that YAML syntax errors become configuration errors."""
        path = tmp_path / "broken.yaml"
        path.write_text("slices: [\n")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(path)


class TestTracePaths:
    """Test trace file resolution."""

    def test_relative_to_config(self, tmp_path: Path) -> None:
        """Test that relative trace paths resolve against the config directory."""
        write_se_csv(synthesize_se("urban", 2, 3, 6, seed=0), tmp_path / "traces" / "se.csv")
        path = write_config(
            tmp_path / "scenario.yaml",
            slices=[{"ue_count": 2, "delay_budget_ms": 3, "channel": {"trace_path": "traces/se.csv"}}],
        )
        config = load_config(path)
        assert config.slices[0].channel.trace_path == tmp_path / "traces" / "se.csv"
        assert config.slices[0].channel.profile is None

    def test_missing_trace(self, tmp_path: Path) -> None:
        """Test that a trace path must point at a file."""
        path = write_config(
            tmp_path / "scenario.yaml",
            slices=[{"ue_count": 2, "delay_budget_ms": 3, "channel": {"trace_path": "nope.csv"}}],
        )
        with pytest.raises(ConfigError, match="does not exist"):
            load_config(path)


class TestOverridesAndDump:
    """Test CLI overrides and the resolved echo."""

    def test_overrides(self, config_path: Path) -> None:
        """Test that overrides land in their sections and None is ignored."""
        config = apply_overrides(load_config(config_path), seeds=(5,), grid_step=0.5, big_m=1e4, epsilon=None)
        assert config.seeds == [5]
        assert config.search.grid_step == 0.5
        assert config.mip.big_m == 1e4
        assert config.mip.epsilon == 1e-6

    def test_override_revalidated(self, config_path: Path) -> None:
        """Test that overridden values pass the same checks."""
        with pytest.raises(ConfigError, match="grid_step"):
            apply_overrides(load_config(config_path), grid_step=-1.0)

    def test_unknown_override(self, config_path: Path) -> None:
        """Test that only known settings can be overridden."""
        with pytest.raises(ConfigError, match="not an overridable setting"):
            apply_overrides(load_config(config_path), horizon=3)

    def test_dump_round_trip(self, config_path: Path) -> None:
        """Test that the resolved echo has sorted keys and parses back to the same config."""
        config = load_config(config_path)
        text = dump_resolved(config)
        data = yaml.safe_load(text)
        assert list(data) == sorted(data)
        assert "eta_max" in data and "mip" in data
        assert ScenarioConfig.model_validate(data) == config
