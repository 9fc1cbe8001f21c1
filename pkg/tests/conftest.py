"""
Test Configuration Module.

This module contains pytest fixtures shared by the simulator tests: a small scenario that runs
in seconds, the world built from it, and factories for single devices, servers and tasks whose
negotiation has a known interior solution.

Key Features:
- Small two-UAV scenario over four epochs
- Device, server and task factories with overridable fields
- Trade terms for one device/server pair at a fixed uplink rate
- Environment isolation for configuration variables
"""
# tests/conftest.py
import os
from unittest.mock import patch

import pytest

from uav_mec_sim.bargaining import TradeTerms
from uav_mec_sim.config import ScenarioConfig
from uav_mec_sim.models import MecServer, MobileDevice, ServerKind, Task
from uav_mec_sim.scenario import build_scenario


@pytest.fixture(autouse=True)
def clean_environment():
    """Run every test without the simulator's environment overrides."""
    with patch.dict(
        os.environ,
        {k: v for k, v in os.environ.items() if k not in ("UAV_MEC_CONFIG", "UAV_MEC_SEED", "LOG_LEVEL", "LOG_FILE")},
        clear=True,
    ):
        yield


@pytest.fixture()
def small_config() -> ScenarioConfig:
    """Six devices, the base station and two UAVs for 40 slots (four epochs)."""
    return ScenarioConfig.model_validate(
        {
            "seed": 3,
            "time": {"slot_duration_s": 0.1, "slots_per_epoch": 10, "total_slots": 40},
            "mds": {"count": 6},
            "uavs": {
                "count": 2,
                "initial_positions": [(200.0, 200.0), (800.0, 800.0)],
                "final_positions": [(300.0, 250.0), (700.0, 750.0)],
            },
        }
    )


@pytest.fixture()
def small_world(small_config):
    return build_scenario(small_config)


@pytest.fixture()
def make_md():
    def factory(**overrides) -> MobileDevice:
        fields = dict(
            id=0,
            position=(600.0, 500.0),
            f_max=1e9,
            transmit_power_w=0.1,
            energy_budget_j=3600.0,
            payment_budget=20.0,
            weight=0.6,
            capacitance=1e-27,
        )
        fields.update(overrides)
        return MobileDevice(**fields)

    return factory


@pytest.fixture()
def make_server():
    def factory(**overrides) -> MecServer:
        fields = dict(
            id=0,
            kind=ServerKind.TERRESTRIAL,
            position=(500.0, 500.0, 10.0),
            n_core=4,
            f_core_max=2e10,
            f_total_max=2e10,
            energy_budget_j=72000.0,
            price_cap=1e-9,
            weight=0.5,
            capacitance=1e-27,
        )
        fields.update(overrides)
        return MecServer(**fields)

    return factory


@pytest.fixture()
def make_task():
    def factory(**overrides) -> Task:
        fields = dict(id=0, md_id=0, generation_slot=0, size_bits=2e6, intensity=1000.0, deadline_s=3.0)
        fields.update(overrides)
        return Task(**fields)

    return factory


@pytest.fixture()
def trade_terms(make_md, make_server, make_task) -> TradeTerms:
    """2 Mbit at 1000 cycles/bit over a 20 Mbit/s uplink, 3 s deadline, 20 GHz server."""
    return TradeTerms.build(make_task(), make_md(), make_server(), rate=20e6, f_avl=2e10)
