"""
Scenario Construction Module.

Builds the initial world from a validated configuration and hands out the seeded random
streams used by the run loop. Each stream is keyed by (seed, purpose, index) so task
arrivals, device mobility and fading are identical across strategies sharing a seed.

Key Features:
- Uniform sampling of device and server parameters from configured ranges
- Reference deployment with the base station at the area centre and four UAVs
- Purpose-keyed random generators for common random numbers
- Conversion of published units (GHz, dBm, Wh/GHz) to SI units
"""

import logging
import math
from enum import IntEnum

import numpy as np

from uav_mec_sim.config import ScenarioConfig, UavConfig
from uav_mec_sim.mobility import UavKinematicLimits
from uav_mec_sim.models import MecServer, MobileDevice, ServerKind, TimeGrid, UavPowerParams, WorldState

logger = logging.getLogger(__name__)

GHZ = 1e9
JOULES_PER_WH = 3600.0


class Stream(IntEnum):
    SCENARIO = 0
    TASKS = 1
    MOBILITY = 2
    FADING = 3


# Sub-keys of the scenario stream; servers keep their draws when the device count changes.
MD_DRAWS = 0
SERVER_DRAWS = 1


def stream(seed: int, purpose: Stream, *keys: int) -> np.random.Generator:
    """Independent generator for ``purpose`` at the given slot or epoch keys."""
    return np.random.default_rng([seed, int(purpose), *keys])


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def power_params(uavs: UavConfig) -> UavPowerParams:
    """Aerodynamic constants of the rotary-wing power model."""
    v0 = uavs.mean_induced_velocity
    return UavPowerParams(
        eta1=uavs.blade_profile_power_w,
        eta2=uavs.induced_hover_power_w / v0,
        eta3=v0**4,
        eta4=0.5 * uavs.fuselage_drag_ratio * uavs.air_density * uavs.rotor_solidity * uavs.rotor_disc_area,
        tip_speed=uavs.tip_speed,
    )


def time_grid(config: ScenarioConfig) -> TimeGrid:
    return TimeGrid(
        slot_duration_s=config.time.slot_duration_s,
        slots_per_epoch=config.time.slots_per_epoch,
        total_slots=config.time.total_slots,
    )


def _sample_mds(config: ScenarioConfig, rng: np.random.Generator) -> list[MobileDevice]:
    pop = config.mds
    mds = []
    for i in range(pop.count):
        position = (float(rng.uniform(0, config.area.x_max)), float(rng.uniform(0, config.area.y_max)))
        speed = float(pop.mobility.mean_speed.sample(rng))
        heading = float(rng.uniform(0, 2 * math.pi))
        mean_velocity = (speed * math.cos(heading), speed * math.sin(heading))
        f_max = float(pop.f_max_ghz.sample(rng)) * GHZ
        mds.append(
            MobileDevice(
                id=i,
                position=position,
                velocity=mean_velocity,
                mean_velocity=mean_velocity,
                f_max=f_max,
                transmit_power_w=dbm_to_watts(float(pop.transmit_power_dbm.sample(rng))),
                energy_budget_j=pop.energy_budget_wh_per_ghz * JOULES_PER_WH * f_max / GHZ,
                payment_budget=pop.payment_budget,
                weight=float(pop.weight.sample(rng)),
                capacitance=pop.capacitance,
            )
        )
    return mds


def _sample_servers(config: ScenarioConfig, rng: np.random.Generator) -> list[MecServer]:
    cfg = config.servers
    servers: list[MecServer] = []
    if cfg.include_mbs:
        f_total = float(cfg.mbs_frequency_ghz.sample(rng)) * GHZ * cfg.frequency_scale
        servers.append(
            MecServer(
                id=0,
                kind=ServerKind.TERRESTRIAL,
                position=(cfg.mbs_position[0], cfg.mbs_position[1], cfg.mbs_height),
                n_core=int(cfg.cores.sample_int(rng)),
                f_core_max=f_total * cfg.core_frequency_fraction,
                f_total_max=f_total,
                energy_budget_j=cfg.mbs_energy_wh_per_ghz * JOULES_PER_WH * f_total / GHZ,
                price_cap=cfg.price_cap,
                weight=float(cfg.weight.sample(rng)),
                capacitance=cfg.capacitance,
            )
        )
    for j in range(config.uavs.count):
        f_total = float(cfg.uav_frequency_ghz.sample(rng)) * GHZ * cfg.frequency_scale
        x, y = config.uavs.initial_positions[j]
        servers.append(
            MecServer(
                id=len(servers),
                kind=ServerKind.AERIAL,
                position=(x, y, config.uavs.altitude),
                n_core=int(cfg.cores.sample_int(rng)),
                f_core_max=f_total * cfg.core_frequency_fraction,
                f_total_max=f_total,
                energy_budget_j=cfg.uav_energy_budget_j,
                price_cap=cfg.price_cap,
                weight=float(cfg.weight.sample(rng)),
                capacitance=cfg.capacitance,
            )
        )
    return servers


def build_scenario(config: ScenarioConfig) -> WorldState:
    """Sample the initial world for ``config.seed``."""
    mds = _sample_mds(config, stream(config.seed, Stream.SCENARIO, MD_DRAWS))
    servers = _sample_servers(config, stream(config.seed, Stream.SCENARIO, SERVER_DRAWS))
    world = WorldState(
        grid=time_grid(config),
        area=(config.area.x_max, config.area.y_max),
        mds=mds,
        servers=servers,
        uav_finals=[tuple(p) for p in config.uavs.final_positions[: config.uavs.count]],
    )
    logger.info(
        f"Built scenario seed={config.seed}: {len(mds)} MDs, "
        f"{sum(1 for s in servers if not s.is_aerial)} MBS, {len(world.uavs)} UAVs"
    )
    return world


def kinematic_limits(config: ScenarioConfig) -> UavKinematicLimits:
    uavs = config.uavs
    return UavKinematicLimits(
        v_max=uavs.v_max,
        d_safe=uavs.d_safe,
        altitude=uavs.altitude,
        initial=[tuple(p) for p in uavs.initial_positions[: uavs.count]],
        final=[tuple(p) for p in uavs.final_positions[: uavs.count]],
        area=(config.area.x_max, config.area.y_max),
        reach_speed_fraction=uavs.reach_speed_fraction,
    )
