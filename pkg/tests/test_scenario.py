"""Tests for scenario construction and seeded streams."""

import numpy as np
import pytest

from uav_mec_sim.config import ScenarioConfig, apply_overrides
from uav_mec_sim.costs import hover_power
from uav_mec_sim.models import ServerKind
from uav_mec_sim.scenario import GHZ, Stream, build_scenario, dbm_to_watts, kinematic_limits, power_params, stream


def test_build_scenario_layout(small_config):
    """Test the world holds the configured population."""
    world = build_scenario(small_config)

    assert len(world.mds) == 6
    assert len(world.servers) == 3
    assert world.servers[0].kind == ServerKind.TERRESTRIAL
    assert world.servers[0].position == (500.0, 500.0, 10.0)
    assert [s.id for s in world.uavs] == [1, 2]
    assert world.uavs[0].position == (200.0, 200.0, 100.0)
    assert world.uav_finals == [(300.0, 250.0), (700.0, 750.0)]
    assert world.uav_positions().shape == (2, 2)
    assert world.md_positions().shape == (6, 2)


def test_sampled_parameters_within_ranges(small_config):
    """Test every sampled parameter respects its range."""
    world = build_scenario(small_config)

    for md in world.mds:
        assert 0.5 * GHZ <= md.f_max <= 1.0 * GHZ
        assert dbm_to_watts(10.0) <= md.transmit_power_w <= dbm_to_watts(25.0)
        assert md.energy_budget_j == pytest.approx(3600.0 * md.f_max / GHZ)
        assert 0 <= md.position[0] <= 1000.0
    for server in world.servers:
        assert 2 <= server.n_core <= 10
        assert server.f_core_max == server.f_total_max
    assert 20 * GHZ <= world.servers[0].f_total_max <= 40 * GHZ
    for uav in world.uavs:
        assert 10 * GHZ <= uav.f_total_max <= 20 * GHZ
        assert uav.energy_budget_j == pytest.approx(360e3)


def test_build_scenario_is_deterministic(small_config):
    """Test the same seed builds the same world."""
    a = build_scenario(small_config)
    b = build_scenario(small_config)
    assert a.model_dump() == b.model_dump()

    other = build_scenario(small_config.model_copy(update={"seed": 4}))
    assert other.mds[0].position != a.mds[0].position


def test_frequency_scale(small_config):
    """Test the server frequency sweep multiplier."""
    base = build_scenario(small_config)
    scaled_config = ScenarioConfig.model_validate(
        {**small_config.model_dump(), "servers": {**small_config.servers.model_dump(), "frequency_scale": 2.0}}
    )
    scaled = build_scenario(scaled_config)
    for a, b in zip(base.servers, scaled.servers):
        assert b.f_total_max == pytest.approx(2.0 * a.f_total_max)


def test_server_draws_independent_of_device_count(small_config):
    """Test servers keep their sampled parameters when the device count changes."""
    base = build_scenario(small_config)
    more = build_scenario(apply_overrides(small_config, {"mds.count": 12}))
    fewer = build_scenario(apply_overrides(small_config, {"mds.count": 1}))

    assert [s.model_dump() for s in more.servers] == [s.model_dump() for s in base.servers]
    assert [s.model_dump() for s in fewer.servers] == [s.model_dump() for s in base.servers]
    assert more.mds[0].model_dump() == base.mds[0].model_dump()


def test_streams_are_keyed():
    """Test streams repeat per key and differ across purposes."""
    a = stream(5, Stream.TASKS, 3).random(4)
    b = stream(5, Stream.TASKS, 3).random(4)
    c = stream(5, Stream.FADING, 3).random(4)
    d = stream(5, Stream.TASKS, 4).random(4)

    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert not np.allclose(a, d)


def test_unit_conversions():
    """Test dBm conversion and the hover power constant."""
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    params = power_params(ScenarioConfig().uavs)
    assert hover_power(params) == pytest.approx(79.86 + 88.63)


def test_kinematic_limits(small_config):
    """Test limits derived from the configuration."""
    limits = kinematic_limits(small_config)
    world = build_scenario(small_config)

    assert limits.step_length(world.grid) == pytest.approx(30.0)
    assert limits.reach_radius(world.grid.epoch_count, world.grid) == pytest.approx(30.0)
    assert limits.reach_radius(0, world.grid) == pytest.approx(0.9 * 30.0 * 4 + 30.0)
