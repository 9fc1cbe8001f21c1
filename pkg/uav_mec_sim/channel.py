"""
Channel Model Module.

Probabilistic line-of-sight channels for device uplinks to the base station (3GPP urban
micro LoS probability with log-normal shadowing) and to UAVs (elevation-angle sigmoid LoS
probability, NLoS attenuation), both with Nakagami-m small-scale fading.

Key Features:
- LoS probability for terrestrial and aerial links
- Nakagami-m power draws through the Gamma distribution
- Large-scale loss anchored at the free-space reference distance
- Per-slot link realizations for the fading cache
- Shannon uplink rate
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from uav_mec_sim.config import ChannelConfig
from uav_mec_sim.models import MecServer, MobileDevice, ServerKind

logger = logging.getLogger(__name__)

LIGHTSPEED = 3e8


@dataclass(frozen=True, slots=True)
class FadingSample:
    """Small-scale powers |h|^2 and shadowing (dB) for both LoS branches of one link."""

    h2_los: float
    h2_nlos: float
    shadow_los_db: float = 0.0
    shadow_nlos_db: float = 0.0


def distance_3d(md_pos, server: MecServer) -> float:
    dx = md_pos[0] - server.position[0]
    dy = md_pos[1] - server.position[1]
    return math.sqrt(dx * dx + dy * dy + server.position[2] ** 2)


def bandwidth(kind: ServerKind, config: ChannelConfig) -> float:
    return config.bandwidth_aerial_hz if kind == ServerKind.AERIAL else config.bandwidth_terrestrial_hz


def nakagami_shape(kind: ServerKind, los: bool, config: ChannelConfig) -> float:
    if kind == ServerKind.AERIAL:
        return config.nakagami_aerial_los if los else config.nakagami_aerial_nlos
    return config.nakagami_terrestrial_los if los else config.nakagami_terrestrial_nlos


def terrestrial_los_probability(distance: float, config: ChannelConfig) -> float:
    if distance <= 0:
        return 1.0
    decay = math.exp(-distance / config.los_d2)
    return min(config.los_d1 / distance, 1.0) * (1.0 - decay) + decay


def aerial_los_probability(altitude: float, distance: float, config: ChannelConfig) -> float:
    if distance <= 0:
        return 1.0
    angle = math.degrees(math.asin(min(1.0, altitude / distance)))
    return 1.0 / (1.0 + config.sigmoid_p1 * math.exp(-config.sigmoid_p2 * (angle - config.sigmoid_p1)))


def los_probability(md_pos, server: MecServer, config: ChannelConfig) -> float:
    """LoS probability of the link, using the 3-D distance."""
    d = distance_3d(md_pos, server)
    if server.kind == ServerKind.AERIAL:
        return aerial_los_probability(server.position[2], d, config)
    return terrestrial_los_probability(d, config)


def sample_small_scale(kind: ServerKind, los: bool, config: ChannelConfig, rng: np.random.Generator, size=None):
    """Nakagami-m amplitude: |h|^2 ~ Gamma(m, mean_power / m)."""
    m = nakagami_shape(kind, los, config)
    return np.sqrt(rng.gamma(m, config.mean_power / m, size))


def free_space_anchor(reference_distance: float, config: ChannelConfig) -> float:
    return (4 * math.pi * reference_distance * config.carrier_hz / LIGHTSPEED) ** 2


def large_scale_loss(
    kind: ServerKind,
    distance: float,
    los: bool,
    config: ChannelConfig,
    rng: np.random.Generator | None = None,
    shadow_db: float | None = None,
) -> float:
    """Linear loss factor. Terrestrial links carry log-normal shadowing; aerial NLoS is divided by kappa."""
    if kind == ServerKind.AERIAL:
        d0 = config.reference_distance_aerial
        loss = free_space_anchor(d0, config) * (max(distance, d0) / d0) ** config.exponent_aerial
        return loss if los else loss / config.nlos_attenuation

    d0 = config.reference_distance_terrestrial
    beta = config.exponent_terrestrial_los if los else config.exponent_terrestrial_nlos
    if shadow_db is None:
        sigma = config.shadowing_los_db if los else config.shadowing_nlos_db
        shadow_db = float(rng.normal(0.0, sigma)) if rng is not None else 0.0
    return free_space_anchor(d0, config) * (max(distance, d0) / d0) ** beta * 10.0 ** (shadow_db / 10.0)


def draw_fading(kind: ServerKind, config: ChannelConfig, rng: np.random.Generator) -> FadingSample:
    h2_los = float(sample_small_scale(kind, True, config, rng)) ** 2
    h2_nlos = float(sample_small_scale(kind, False, config, rng)) ** 2
    shadow_los = float(rng.normal(0.0, config.shadowing_los_db))
    shadow_nlos = float(rng.normal(0.0, config.shadowing_nlos_db))
    return FadingSample(h2_los, h2_nlos, shadow_los, shadow_nlos)


def draw_slot_fading(
    mds: list[MobileDevice], servers: list[MecServer], config: ChannelConfig, rng: np.random.Generator
) -> dict[tuple[int, int], FadingSample]:
    """Realizations of every device-server link for one slot, in (md, server) order."""
    return {(md.id, s.id): draw_fading(s.kind, config, rng) for md in mds for s in servers}


def branch_gains(md_pos, server: MecServer, config: ChannelConfig, fading: FadingSample) -> tuple[float, float]:
    d = distance_3d(md_pos, server)
    g_los = fading.h2_los / large_scale_loss(server.kind, d, True, config, shadow_db=fading.shadow_los_db)
    g_nlos = fading.h2_nlos / large_scale_loss(server.kind, d, False, config, shadow_db=fading.shadow_nlos_db)
    return g_los, g_nlos


def channel_gain(md_pos, server: MecServer, config: ChannelConfig, fading: FadingSample) -> float:
    """Probability-weighted combination of the LoS and NLoS branch gains."""
    p_los = los_probability(md_pos, server, config)
    g_los, g_nlos = branch_gains(md_pos, server, config, fading)
    return p_los * g_los + (1.0 - p_los) * g_nlos


def shannon_rate(bandwidth_hz: float, power_w: float, gain: float, noise_w: float) -> float:
    return bandwidth_hz * math.log2(1.0 + power_w * gain / noise_w)


def uplink_rate(md: MobileDevice, server: MecServer, gain: float, config: ChannelConfig) -> float:
    return shannon_rate(bandwidth(server.kind, config), md.transmit_power_w, gain, config.noise_w)


def mean_gain_constant(p_los: float, config: ChannelConfig) -> float:
    """Constant g such that the mean aerial gain at 3-D distance d is g * d^-beta."""
    d0 = config.reference_distance_aerial
    branch_weight = p_los + (1.0 - p_los) * config.nlos_attenuation
    return config.mean_power * branch_weight * d0**config.exponent_aerial / free_space_anchor(d0, config)
