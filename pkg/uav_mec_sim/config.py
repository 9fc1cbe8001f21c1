"""
Configuration Management Module.

This module handles all configuration for the UAV-assisted edge computing simulator using
Pydantic models for validation and type safety. Every parameter of the default scenario is
embedded as a field default, so an empty YAML file runs the reference deployment (30 mobile
devices, one macro base station and four UAVs over a 1 km square for 600 slots).

Key Features:
- Pydantic models for type-safe configuration validation
- YAML file loading with environment variable overrides
- Structured configuration sections for the time grid, population, channel, UAVs,
  bargaining, trajectory control and strategy selection
- Interval parameters expressed as validated ``Range`` models
- Dotted-path overrides for parameter sweeps
"""

import logging
import math
import os
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

logger = logging.getLogger(__name__)

CONFIG_PATH_ENV = "UAV_MEC_CONFIG"
SEED_ENV = "UAV_MEC_SEED"


class ConfigurationError(ValueError):
    """Raised when a scenario configuration cannot be loaded or validated."""


class StrategyKind(str, Enum):
    """Decision strategy driving a run."""

    TJCCT = "TJCCT"
    LS = "LS"
    ECRAS = "ECRAS"
    PAS = "PAS"
    GCOS = "GCOS"
    STCS = "STCS"

    @classmethod
    def parse(cls, name: str) -> "StrategyKind":
        try:
            return cls(name.strip().upper())
        except ValueError as e:
            valid = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"Unknown strategy '{name}', expected one of {valid}") from e


class Range(BaseModel):
    """Closed interval [lo, hi] sampled uniformly."""

    model_config = ConfigDict(frozen=True)

    lo: float
    hi: float

    @model_validator(mode="before")
    @classmethod
    def from_pair(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)):
            if len(data) != 2:
                raise ValueError("Range must have exactly two bounds")
            return {"lo": data[0], "hi": data[1]}
        return data

    @model_validator(mode="after")
    def check_order(self) -> "Range":
        if self.lo > self.hi:
            raise ValueError(f"Range lower bound {self.lo} exceeds upper bound {self.hi}")
        return self

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None):
        return rng.uniform(self.lo, self.hi, size)

    def sample_int(self, rng: np.random.Generator, size: Optional[int] = None):
        return rng.integers(int(self.lo), int(self.hi) + 1, size)


class TimeGridConfig(BaseModel):
    """Two-timescale clock: slots of ``slot_duration_s`` grouped into epochs."""

    slot_duration_s: float = Field(default=0.1, gt=0)
    slots_per_epoch: int = Field(default=10, gt=0)
    total_slots: int = Field(default=600, gt=0)

    @model_validator(mode="after")
    def check_divisible(self) -> "TimeGridConfig":
        if self.total_slots % self.slots_per_epoch != 0:
            raise ValueError("total_slots must be a multiple of slots_per_epoch")
        return self


class AreaConfig(BaseModel):
    """Rectangular service area in meters."""

    x_max: float = Field(default=1000.0, gt=0)
    y_max: float = Field(default=1000.0, gt=0)


class MobilityConfig(BaseModel):
    """Gauss-Markov parameters shared by all mobile devices."""

    memory: float = Field(default=0.9, ge=0.0, le=1.0)
    mean_speed: Range = Field(default=Range(lo=0.0, hi=1.0), description="Asymptotic mean speed (m/s)")
    asymptotic_std: float = Field(default=2.0, ge=0.0, description="Asymptotic velocity std (m/s)")


class PopulationConfig(BaseModel):
    """Mobile devices and their task workload."""

    count: int = Field(default=30, ge=0)
    f_max_ghz: Range = Field(default=Range(lo=0.5, hi=1.0))
    transmit_power_dbm: Range = Field(default=Range(lo=10.0, hi=25.0))
    energy_budget_wh_per_ghz: float = Field(default=1.0, gt=0)
    payment_budget: float = Field(default=20.0, gt=0)
    weight: Range = Field(default=Range(lo=0.0, hi=1.0))
    capacitance: float = Field(default=1e-27, gt=0)
    arrival_probability: float = Field(default=0.3, ge=0.0, le=1.0)
    task_size_mbit: Range = Field(default=Range(lo=1.0, hi=5.0))
    task_size_scale: float = Field(default=1.0, gt=0, description="Computation size sweep multiplier")
    intensity_cycles_per_bit: Range = Field(default=Range(lo=500.0, hi=1500.0))
    deadline_s: Range = Field(default=Range(lo=0.1, hi=5.0))
    mobility: MobilityConfig = Field(default_factory=MobilityConfig)

    @field_validator("weight", "deadline_s", "task_size_mbit", "intensity_cycles_per_bit", "f_max_ghz")
    @classmethod
    def validate_nonnegative(cls, v: Range) -> Range:
        if v.lo < 0:
            raise ValueError("Population ranges must be nonnegative")
        return v


class ServerPopulationConfig(BaseModel):
    """Terrestrial and aerial edge servers."""

    include_mbs: bool = Field(default=True)
    mbs_position: tuple[float, float] = Field(default=(500.0, 500.0))
    mbs_height: float = Field(default=10.0, ge=0)
    mbs_frequency_ghz: Range = Field(default=Range(lo=20.0, hi=40.0))
    uav_frequency_ghz: Range = Field(default=Range(lo=10.0, hi=20.0))
    cores: Range = Field(default=Range(lo=2, hi=10))
    core_frequency_fraction: float = Field(default=1.0, gt=0, le=1.0)
    frequency_scale: float = Field(default=1.0, gt=0, description="Server frequency sweep multiplier")
    mbs_energy_wh_per_ghz: float = Field(default=1.0, gt=0)
    uav_energy_budget_j: float = Field(default=360e3, gt=0)
    price_cap: float = Field(default=1e-9, gt=0, description="Maximum unit price (currency per cycle/s)")
    weight: Range = Field(default=Range(lo=0.0, hi=1.0))
    capacitance: float = Field(default=1e-27, gt=0)

    @field_validator("cores")
    @classmethod
    def validate_cores(cls, v: Range) -> Range:
        if v.lo < 1:
            raise ValueError("Servers need at least one core")
        return v


class ChannelConfig(BaseModel):
    """Air-to-ground and terrestrial channel constants."""

    bandwidth_terrestrial_hz: float = Field(default=20e6, gt=0)
    bandwidth_aerial_hz: float = Field(default=10e6, gt=0)
    noise_dbm: float = Field(default=-98.0)
    carrier_hz: float = Field(default=2e9, gt=0)
    reference_distance_terrestrial: float = Field(default=1.0, gt=0)
    reference_distance_aerial: float = Field(default=1.0, gt=0)
    exponent_terrestrial_los: float = Field(default=2.42, gt=0)
    exponent_terrestrial_nlos: float = Field(default=4.28, gt=0)
    exponent_aerial: float = Field(default=2.0, gt=0)
    nlos_attenuation: float = Field(default=0.2, gt=0)
    los_d1: float = Field(default=18.0, gt=0)
    los_d2: float = Field(default=36.0, gt=0)
    sigmoid_p1: float = Field(default=10.0, gt=0)
    sigmoid_p2: float = Field(default=0.6, gt=0)
    nakagami_terrestrial_los: float = Field(default=4.0, ge=0.5)
    nakagami_terrestrial_nlos: float = Field(default=2.0, ge=0.5)
    nakagami_aerial_los: float = Field(default=3.0, ge=0.5)
    nakagami_aerial_nlos: float = Field(default=1.0, ge=0.5)
    shadowing_los_db: float = Field(default=4.0, ge=0)
    shadowing_nlos_db: float = Field(default=6.0, ge=0)
    mean_power: float = Field(default=1.0, gt=0)

    @property
    def noise_w(self) -> float:
        return 10.0 ** (self.noise_dbm / 10.0) / 1000.0


class UavConfig(BaseModel):
    """UAV kinematics and rotary-wing power model."""

    count: int = Field(default=4, ge=0)
    altitude: float = Field(default=100.0, gt=0)
    v_max: float = Field(default=30.0, gt=0)
    d_safe: float = Field(default=10.0, gt=0)
    reach_speed_fraction: float = Field(default=0.9, gt=0, le=1.0)
    initial_positions: list[tuple[float, float]] = Field(
        default=[(50.0, 900.0), (900.0, 900.0), (100.0, 100.0), (800.0, 1000.0)]
    )
    final_positions: list[tuple[float, float]] = Field(
        default=[(500.0, 0.0), (500.0, 500.0), (500.0, 500.0), (500.0, 500.0)]
    )
    blade_profile_power_w: float = Field(default=79.86, gt=0)
    induced_hover_power_w: float = Field(default=88.63, gt=0)
    mean_induced_velocity: float = Field(default=4.03, gt=0)
    tip_speed: float = Field(default=120.0, gt=0)
    fuselage_drag_ratio: float = Field(default=0.6, gt=0)
    air_density: float = Field(default=1.225, gt=0)
    rotor_solidity: float = Field(default=0.05, gt=0)
    rotor_disc_area: float = Field(default=0.503, gt=0)

    @model_validator(mode="after")
    def check_positions(self) -> "UavConfig":
        if len(self.initial_positions) < self.count or len(self.final_positions) < self.count:
            raise ValueError(f"Need initial and final positions for all {self.count} UAVs")
        return self


class BargainingConfig(BaseModel):
    """Alternating-offers negotiation settings."""

    horizon: int = Field(default=10, ge=1, description="Number of alternating periods T_b")
    max_rounds: int = Field(default=100, ge=1)
    tolerance: float = Field(default=1e-6, gt=0)
    partition_form: Literal["exact", "printed"] = Field(default="exact")
    qoe_energy_normalizer: Literal["server", "md"] = Field(default="server")
    propulsion_split: Literal["shared", "full"] = Field(default="shared")


class TrajectoryConfig(BaseModel):
    """Successive convex approximation settings for UAV control."""

    sca_tolerance: float = Field(default=1e-4, gt=0)
    sca_max_iterations: int = Field(default=50, ge=1)
    kkt_tolerance: float = Field(default=1e-6, gt=0)
    barrier_factor: float = Field(default=10.0, gt=1)
    los_mode: Literal["epoch_start", "fixed"] = Field(default="epoch_start")
    fixed_los_probability: float = Field(default=0.5, ge=0.0, le=1.0)


class StrategyConfig(BaseModel):
    """Strategy selection and baseline parameters."""

    kind: StrategyKind = Field(default=StrategyKind.TJCCT)
    pas_factor: float = Field(default=0.1, gt=0, lt=1)
    pas_threshold: float = Field(default=0.5, ge=0, le=1)
    pas_initial_price_fraction: float = Field(default=0.5, gt=0, le=1)
    pas_min_price_fraction: float = Field(default=1e-3, gt=0, le=1)
    gcos_max_rounds: int = Field(default=20, ge=1)

    @field_validator("kind", mode="before")
    @classmethod
    def parse_kind(cls, v: Any) -> Any:
        if isinstance(v, str):
            return StrategyKind.parse(v)
        return v


class LoggingConfig(BaseModel):
    """Configuration for logging settings."""

    level: str = Field(default="INFO")
    format: str = Field(default="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    file_path: Optional[Path] = Field(default=None)

    @field_validator("level", mode="before")
    @classmethod
    def validate_level(cls, v: Any) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        level = str(v).upper()
        if level not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return level


class ScenarioConfig(BaseModel):
    """Main scenario configuration."""

    model_config = ConfigDict(validate_assignment=True)

    seed: int = Field(default=1, ge=0)
    time: TimeGridConfig = Field(default_factory=TimeGridConfig)
    area: AreaConfig = Field(default_factory=AreaConfig)
    mds: PopulationConfig = Field(default_factory=PopulationConfig)
    servers: ServerPopulationConfig = Field(default_factory=ServerPopulationConfig)
    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    uavs: UavConfig = Field(default_factory=UavConfig)
    bargaining: BargainingConfig = Field(default_factory=BargainingConfig)
    trajectory: TrajectoryConfig = Field(default_factory=TrajectoryConfig)
    strategy: StrategyConfig = Field(default_factory=StrategyConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    @model_validator(mode="after")
    def check_reachability(self) -> "ScenarioConfig":
        epochs = self.time.total_slots // self.time.slots_per_epoch
        step = self.uavs.v_max * self.time.slot_duration_s * self.time.slots_per_epoch
        budget = self.uavs.reach_speed_fraction * step * epochs + step
        for j in range(self.uavs.count):
            start = self.uavs.initial_positions[j]
            goal = self.uavs.final_positions[j]
            if math.dist(start, goal) > budget:
                raise ValueError(f"UAV {j + 1} cannot reach its destination within the horizon")
            for x, y in (start, goal):
                if not (0 <= x <= self.area.x_max and 0 <= y <= self.area.y_max):
                    raise ValueError(f"UAV {j + 1} anchor ({x}, {y}) lies outside the area")
        return self


def _set_dotted(data: dict[str, Any], dotted: str, value: Any) -> None:
    node = data
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"Override path '{dotted}' crosses a scalar field")
    node[parts[-1]] = value


def apply_overrides(config: ScenarioConfig, overrides: dict[str, Any]) -> ScenarioConfig:
    """Return a validated copy of ``config`` with dotted-path overrides applied."""
    data = config.model_dump(mode="python")
    for dotted, value in overrides.items():
        _set_dotted(data, dotted, value)
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid override {overrides}: {e}") from e


def load_config(path: Optional[Path | str] = None) -> ScenarioConfig:
    """Load configuration from a YAML file, environment variables and defaults."""

    if path is None and os.getenv(CONFIG_PATH_ENV):
        path = os.getenv(CONFIG_PATH_ENV)

    data: dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        try:
            with open(config_path, encoding="utf-8") as f:
                loaded = yaml.safe_load(f)
        except OSError as e:
            raise ConfigurationError(f"Cannot read configuration file {config_path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Malformed configuration file {config_path}: {e}") from e
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigurationError(f"Configuration file {config_path} must contain a mapping")
        data = loaded

    if os.getenv("LOG_LEVEL"):
        _set_dotted(data, "logging.level", os.getenv("LOG_LEVEL"))
    if os.getenv("LOG_FILE"):
        _set_dotted(data, "logging.file_path", os.getenv("LOG_FILE"))
    if os.getenv(SEED_ENV):
        _set_dotted(data, "seed", os.getenv(SEED_ENV))

    try:
        config = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid configuration: {e}") from e

    logger.info("Configuration loaded successfully")
    return config
