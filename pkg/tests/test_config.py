"""Tests for configuration management."""

import os
from pathlib import Path
from unittest.mock import patch

import pytest

from uav_mec_sim.config import (
    ConfigurationError, Range, ScenarioConfig, StrategyKind, TimeGridConfig, apply_overrides, load_config,
)


def test_load_config_defaults():
    """Test loading configuration with default values."""
    config = load_config()

    assert isinstance(config, ScenarioConfig)
    assert config.seed == 1
    assert config.mds.count == 30
    assert config.uavs.count == 4
    assert config.servers.include_mbs is True
    assert config.time.total_slots == 600
    assert config.time.slots_per_epoch == 10
    assert config.strategy.kind == StrategyKind.TJCCT
    assert config.bargaining.horizon == 10
    assert config.bargaining.partition_form == "exact"
    assert config.logging.level == "INFO"


@patch.dict(os.environ, {"LOG_LEVEL": "debug", "UAV_MEC_SEED": "7"}, clear=True)
def test_load_config_from_environment():
    """Test environment variables override the defaults."""
    config = load_config()

    assert config.seed == 7
    assert config.logging.level == "DEBUG"


def test_load_config_from_yaml(tmp_path):
    """Test loading a YAML scenario file."""
    path = tmp_path / "scenario.yaml"
    path.write_text(
        "seed: 11\n"
        "mds:\n"
        "  count: 5\n"
        "  task_size_mbit: [2, 3]\n"
        "strategy:\n"
        "  kind: pas\n"
    )
    config = load_config(path)

    assert config.seed == 11
    assert config.mds.count == 5
    assert config.mds.task_size_mbit == Range(lo=2.0, hi=3.0)
    assert config.strategy.kind == StrategyKind.PAS


def test_load_config_from_env_path(tmp_path):
    """Test the configuration path can come from the environment."""
    path = tmp_path / "scenario.yaml"
    path.write_text("seed: 4\n")
    with patch.dict(os.environ, {"UAV_MEC_CONFIG": str(path)}, clear=True):
        config = load_config()
    assert config.seed == 4


def test_load_config_empty_file(tmp_path):
    """Test an empty file runs the reference deployment."""
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(path).mds.count == 30


def test_load_config_errors(tmp_path):
    """Test missing, malformed and invalid files raise ConfigurationError."""
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")

    malformed = tmp_path / "malformed.yaml"
    malformed.write_text("seed: [1, 2\n")
    with pytest.raises(ConfigurationError):
        load_config(malformed)

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigurationError):
        load_config(listing)

    unknown = tmp_path / "unknown.yaml"
    unknown.write_text("strategy:\n  kind: RANDOM\n")
    with pytest.raises(ConfigurationError):
        load_config(unknown)


def test_time_grid_must_divide():
    """Test the horizon must hold a whole number of epochs."""
    with pytest.raises(ValueError):
        TimeGridConfig(slots_per_epoch=7, total_slots=600)


def test_range_validation():
    """Test Range parses pairs and rejects reversed bounds."""
    assert Range.model_validate([1, 5]).midpoint == 3.0
    with pytest.raises(ValueError):
        Range(lo=5.0, hi=1.0)
    with pytest.raises(ValueError):
        Range.model_validate([1, 2, 3])


def test_unreachable_destination_rejected():
    """Test a UAV destination outside the flight budget is rejected."""
    with pytest.raises(ValueError):
        ScenarioConfig.model_validate(
            {
                "time": {"total_slots": 20, "slots_per_epoch": 10},
                "uavs": {"count": 1, "initial_positions": [(0.0, 0.0)], "final_positions": [(1000.0, 1000.0)]},
            }
        )


def test_apply_overrides():
    """Test dotted overrides return a validated copy."""
    config = ScenarioConfig()
    updated = apply_overrides(config, {"mds.count": 12, "servers.frequency_scale": 1.5, "seed": 9})

    assert updated.mds.count == 12
    assert updated.servers.frequency_scale == 1.5
    assert updated.seed == 9
    assert config.mds.count == 30

    with pytest.raises(ConfigurationError):
        apply_overrides(config, {"mds.count": -1})
    with pytest.raises(ConfigurationError):
        apply_overrides(config, {"seed.value": 1})


def test_strategy_kind_parse():
    """Test strategy names are case-insensitive and validated."""
    assert StrategyKind.parse(" ecras ") == StrategyKind.ECRAS
    with pytest.raises(ConfigurationError):
        StrategyKind.parse("greedy")


def test_shipped_config_matches_defaults():
    """Test the bundled reference configuration reproduces the built-in defaults."""
    path = Path(__file__).resolve().parent.parent / "configs" / "default.yaml"
    assert load_config(path).model_dump() == ScenarioConfig().model_dump()
