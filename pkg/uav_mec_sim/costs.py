"""Delay and energy primitives for local computing, offloading and UAV flight."""

import math

import numpy as np
from scipy.optimize import minimize_scalar

from uav_mec_sim.models import MecServer, UavPowerParams


def local_delay(cycles: float, f_local: float) -> float:
    if f_local <= 0:
        raise ValueError("Local CPU frequency must be positive")
    return cycles / f_local


def local_energy(cycles: float, f_local: float, capacitance: float) -> float:
    if f_local <= 0:
        raise ValueError("Local CPU frequency must be positive")
    return capacitance * f_local**2 * cycles


def upload_delay(size_bits: float, rate: float) -> float:
    return math.inf if rate <= 0 else size_bits / rate


def edge_delay(size_bits: float, cycles: float, rate: float, f_alloc: float) -> float:
    """Upload plus remote computation; infinite on a dead link or empty allocation."""
    if rate <= 0 or f_alloc <= 0:
        return math.inf
    return size_bits / rate + cycles / f_alloc


def upload_energy(size_bits: float, power_w: float, rate: float) -> float:
    return math.inf if rate <= 0 else power_w * size_bits / rate


def propulsion_power(v, params: UavPowerParams):
    """Rotary-wing power at forward speed ``v`` (scalar or array)."""
    v = np.asarray(v, dtype=float)
    v2 = v * v
    blade = params.eta1 * (1.0 + 3.0 * v2 / params.tip_speed**2)
    induced = params.eta2 * np.sqrt(np.sqrt(params.eta3 + v2 * v2 / 4.0) - v2 / 2.0)
    parasite = params.eta4 * v2 * v
    power = blade + induced + parasite
    return float(power) if power.ndim == 0 else power


def hover_power(params: UavPowerParams) -> float:
    return params.eta1 + params.eta2 * params.eta3**0.25


def min_power_speed(params: UavPowerParams, v_max: float, xatol: float = 1e-6) -> float:
    """Speed in [0, v_max] at which the propulsion power is smallest."""
    if v_max <= 0:
        return 0.0
    result = minimize_scalar(
        lambda v: propulsion_power(v, params), bounds=(0.0, v_max), method="bounded", options={"xatol": xatol}
    )
    if not result.success:
        raise RuntimeError(f"Min-power speed search failed: {result.message}")
    return float(result.x)


def server_task_energy(
    cycles: float,
    f_alloc: float,
    server: MecServer,
    slot_duration_s: float,
    speed: float = 0.0,
    power: UavPowerParams | None = None,
    share: int = 1,
) -> float:
    """Computation energy, plus one slot of flight energy split over ``share`` tasks on UAVs."""
    energy = server.capacitance * f_alloc**2 * cycles
    if server.is_aerial and power is not None:
        energy += propulsion_power(speed, power) * slot_duration_s / max(1, share)
    return energy
