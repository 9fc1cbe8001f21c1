"""
Domain Models Module.

This module defines the domain types shared by every layer of the simulator: the two-timescale
clock, mobile devices, edge servers with their occupancy ledgers, computation tasks, bargaining
outcomes, matching results and per-slot decisions. Slots, epochs and ids are 0-based internally;
writers add one when emitting tables.

Key Features:
- Pydantic models with field validation
- Two-timescale clock with epoch lookup
- Occupancy ledger enforcing core and frequency capacity
- Monotone task lifecycle transitions
- Trade outcomes carrying both parties' utilities
"""

import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ServerKind(str, Enum):
    TERRESTRIAL = "terrestrial"
    AERIAL = "aerial"


class TaskStatus(str, Enum):
    PENDING = "pending"
    LOCAL = "local"
    OFFLOADED = "offloaded"
    COMPLETED = "completed"
    FAILED = "failed"


class Proposer(str, Enum):
    MD = "md"
    SERVER = "server"


class DecisionMode(str, Enum):
    LOCAL = "local"
    EDGE = "edge"


_TRANSITIONS = {
    TaskStatus.PENDING: {TaskStatus.LOCAL, TaskStatus.OFFLOADED, TaskStatus.FAILED},
    TaskStatus.LOCAL: {TaskStatus.COMPLETED},
    TaskStatus.OFFLOADED: {TaskStatus.COMPLETED},
    TaskStatus.COMPLETED: set(),
    TaskStatus.FAILED: set(),
}


class TimeGrid(BaseModel):
    """Slots of length delta grouped into epochs of ``slots_per_epoch`` slots."""

    model_config = ConfigDict(frozen=True)

    slot_duration_s: float = Field(..., gt=0)
    slots_per_epoch: int = Field(..., gt=0)
    total_slots: int = Field(..., gt=0)

    @model_validator(mode="after")
    def check_divisible(self) -> "TimeGrid":
        if self.total_slots % self.slots_per_epoch != 0:
            raise ValueError("total_slots must be a multiple of slots_per_epoch")
        return self

    @property
    def epoch_count(self) -> int:
        return self.total_slots // self.slots_per_epoch

    @property
    def epoch_duration_s(self) -> float:
        return self.slot_duration_s * self.slots_per_epoch

    @property
    def horizon_s(self) -> float:
        return self.slot_duration_s * self.total_slots

    def epoch_of(self, slot: int) -> int:
        """0-based epoch of a 0-based slot (1-based: epoch = ceil(slot / slots_per_epoch))."""
        if not 0 <= slot < self.total_slots:
            raise ValueError(f"Slot {slot} outside [0, {self.total_slots})")
        return slot // self.slots_per_epoch

    def is_epoch_end(self, slot: int) -> bool:
        return (slot + 1) % self.slots_per_epoch == 0

    def slots_for(self, duration_s: float) -> int:
        """Number of whole slots needed to cover ``duration_s`` (at least one)."""
        return max(1, math.ceil(duration_s / self.slot_duration_s - 1e-9))


class UavPowerParams(BaseModel):
    """Rotary-wing propulsion constants."""

    model_config = ConfigDict(frozen=True)

    eta1: float = Field(..., gt=0, description="Blade profile power in hover (W)")
    eta2: float = Field(..., gt=0, description="Induced power scale (W per m/s)")
    eta3: float = Field(..., gt=0, description="Fourth power of the mean rotor induced velocity")
    eta4: float = Field(..., gt=0, description="Parasite power coefficient")
    tip_speed: float = Field(..., gt=0)


class MobileDevice(BaseModel):
    """Ground device with a single CPU core."""

    id: int = Field(..., ge=0)
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    mean_velocity: tuple[float, float] = (0.0, 0.0)
    f_max: float = Field(..., gt=0, description="CPU frequency (cycles/s)")
    n_core: int = Field(default=1)
    transmit_power_w: float = Field(..., gt=0)
    energy_budget_j: float = Field(..., gt=0)
    payment_budget: float = Field(..., gt=0)
    weight: float = Field(..., ge=0, le=1)
    capacitance: float = Field(..., gt=0)
    busy_until: int = Field(default=0, description="First slot at which the core is idle again")

    @field_validator("n_core")
    @classmethod
    def validate_single_core(cls, v: int) -> int:
        if v != 1:
            raise ValueError("Mobile devices have exactly one core")
        return v

    def is_idle(self, slot: int) -> bool:
        return slot >= self.busy_until


class Job(BaseModel):
    """A task occupying one server core and a share of its frequency."""

    task_id: int
    frequency: float = Field(..., gt=0)
    start_slot: int
    release_slot: int

    @model_validator(mode="after")
    def check_span(self) -> "Job":
        if self.release_slot <= self.start_slot:
            raise ValueError("A job must occupy at least one slot")
        return self


class OccupancyLedger(BaseModel):
    """Active jobs of one server."""

    jobs: list[Job] = Field(default_factory=list)

    def active(self, slot: int) -> list[Job]:
        return [job for job in self.jobs if job.start_slot <= slot < job.release_slot]

    def busy_cores(self, slot: int) -> int:
        return len(self.active(slot))

    def committed_frequency(self, slot: int) -> float:
        return sum(job.frequency for job in self.active(slot))

    def release(self, slot: int) -> list[Job]:
        """Drop jobs whose release slot has passed and return them."""
        done = [job for job in self.jobs if job.release_slot <= slot]
        self.jobs = [job for job in self.jobs if job.release_slot > slot]
        return done


class MecServer(BaseModel):
    """Edge server at the base station or on a UAV."""

    id: int = Field(..., ge=0)
    kind: ServerKind
    position: tuple[float, float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    n_core: int = Field(..., ge=1)
    f_core_max: float = Field(..., gt=0)
    f_total_max: float = Field(..., gt=0)
    energy_budget_j: float = Field(..., gt=0)
    price_cap: float = Field(..., gt=0)
    weight: float = Field(..., ge=0, le=1)
    capacitance: float = Field(..., gt=0)
    ledger: OccupancyLedger = Field(default_factory=OccupancyLedger)

    @property
    def is_aerial(self) -> bool:
        return self.kind == ServerKind.AERIAL

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)

    def idle_cores(self, slot: int) -> int:
        return self.n_core - self.ledger.busy_cores(slot)

    def available_frequency(self, slot: int) -> float:
        free = self.f_total_max - self.ledger.committed_frequency(slot)
        return max(0.0, min(self.f_core_max, free))

    def commit(self, job: Job) -> None:
        """Reserve a core and frequency for ``job``; refuses to overbook."""
        if self.idle_cores(job.start_slot) < 1:
            raise ValueError(f"Server {self.id} has no idle core at slot {job.start_slot}")
        committed = self.ledger.committed_frequency(job.start_slot)
        if committed + job.frequency > self.f_total_max * (1 + 1e-9):
            raise ValueError(f"Server {self.id} frequency overbooked at slot {job.start_slot}")
        self.ledger.jobs.append(job)


class TradeOutcome(BaseModel):
    """Agreed allocation and unit price of one negotiation."""

    model_config = ConfigDict(frozen=True)

    f_alloc: float = Field(..., gt=0)
    p_unit: float = Field(..., ge=0)
    utility_md: float
    utility_server: float
    rounds: int = Field(default=0, ge=0)
    proposer: Proposer = Proposer.MD
    p_lower: float = 0.0
    p_upper: float = 0.0
    rate: float = Field(default=0.0, ge=0)

    @property
    def payment(self) -> float:
        return self.f_alloc * self.p_unit


class Task(BaseModel):
    """A computation task with size, intensity and deadline."""

    id: int = Field(..., ge=0)
    md_id: int = Field(..., ge=0)
    generation_slot: int = Field(..., ge=0)
    size_bits: float = Field(..., gt=0)
    intensity: float = Field(..., gt=0, description="Cycles per bit")
    deadline_s: float = Field(..., gt=0)
    status: TaskStatus = TaskStatus.PENDING
    server_id: Optional[int] = None
    start_slot: Optional[int] = None
    finish_slot: Optional[int] = None
    delay_s: Optional[float] = None
    trade: Optional[TradeOutcome] = None
    utility_md: float = 0.0
    utility_server: float = 0.0

    @property
    def total_cycles(self) -> float:
        return self.size_bits * self.intensity

    def elapsed_s(self, slot: int, slot_duration_s: float) -> float:
        return (slot - self.generation_slot) * slot_duration_s

    def completion_delay_s(self, slot_duration_s: float) -> Optional[float]:
        """Generation to end of the finishing slot; ``delay_s`` keeps the sub-slot model delay."""
        if self.finish_slot is None:
            return None
        return (self.finish_slot + 1 - self.generation_slot) * slot_duration_s

    def transition(self, status: TaskStatus) -> None:
        if status not in _TRANSITIONS[self.status]:
            raise ValueError(f"Task {self.id} cannot move from {self.status.value} to {status.value}")
        self.status = status


class SlotDecision(BaseModel):
    """Execution decision taken for one task in one slot."""

    task_id: int
    mode: DecisionMode
    server_id: Optional[int] = None
    trade: Optional[TradeOutcome] = None
    delay_s: float = Field(..., ge=0)
    utility_md: float
    utility_server: float = 0.0


class Rejection(BaseModel):
    task_id: int
    server_id: int
    reason: str


class MatchingResult(BaseModel):
    """Task to server assignment of one slot."""

    assignment: dict[int, Optional[int]] = Field(default_factory=dict)
    matched: dict[int, list[int]] = Field(default_factory=dict)
    trades: dict[int, TradeOutcome] = Field(default_factory=dict)
    rejections: list[Rejection] = Field(default_factory=list)
    proposals: int = 0
    stable: bool = True

    def server_of(self, task_id: int) -> Optional[int]:
        return self.assignment.get(task_id)


class Violation(BaseModel):
    """A UAV kinematic constraint breached by a trajectory."""

    kind: str
    uav_id: int
    epoch: int
    value: float
    limit: float


class WorldState(BaseModel):
    """Everything the run loop mutates."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: TimeGrid
    area: tuple[float, float]
    mds: list[MobileDevice]
    servers: list[MecServer]
    uav_finals: list[tuple[float, float]] = Field(default_factory=list)
    tasks: dict[int, Task] = Field(default_factory=dict)
    slot: int = 0
    next_task_id: int = 0

    @property
    def uavs(self) -> list[MecServer]:
        return [s for s in self.servers if s.is_aerial]

    def uav_positions(self) -> np.ndarray:
        return np.array([s.position[:2] for s in self.uavs], dtype=float).reshape(-1, 2)

    def md_positions(self) -> np.ndarray:
        return np.array([md.position for md in self.mds], dtype=float).reshape(-1, 2)

    def pending_tasks(self) -> list[Task]:
        return sorted(
            (t for t in self.tasks.values() if t.status == TaskStatus.PENDING),
            key=lambda t: t.id,
        )

    def server(self, server_id: int) -> MecServer:
        return self.servers[server_id]
