"""
Simulation Module.

The two-timescale run loop. Every slot draws the new tasks, hands the pending ones to the
selected strategy, commits its decisions to server ledgers and device cores, and retires
finished or expired tasks. Every epoch the strategy repositions the UAVs and the devices move.

Key Features:
- Common random numbers across strategies through purpose-keyed streams
- Fading realizations drawn once per slot through the fading cache
- Occupancy ledgers released on the slot after computation ends
- Tasks still running at the horizon count as completed, tasks still pending as failed
- Per-slot metric snapshots, event trace and trajectory dump
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from uav_mec_sim.cache import FadingCache
from uav_mec_sim.channel import channel_gain, draw_slot_fading, uplink_rate
from uav_mec_sim.config import ScenarioConfig
from uav_mec_sim.metrics import MetricsAccumulator, MetricsReport, metrics
from uav_mec_sim.mobility import (
    GaussMarkovParams, check_uav_constraints, md_position_step, md_velocity_step, predicted_position,
)
from uav_mec_sim.models import DecisionMode, Job, ServerKind, SlotDecision, Task, TaskStatus, Violation, WorldState
from uav_mec_sim.scenario import GHZ, Stream, build_scenario, kinematic_limits, stream
from uav_mec_sim.strategies import SlotContext, Strategy, create_strategy
from uav_mec_sim.traces import RunTraces
from uav_mec_sim.utility import system_utility_slot

logger = logging.getLogger(__name__)

MBIT = 1e6


@dataclass
class RunResult:
    """Everything one run produces."""

    config: ScenarioConfig
    report: MetricsReport
    accumulator: MetricsAccumulator
    traces: RunTraces
    world: WorldState
    trajectory: np.ndarray
    violations: list[Violation] = field(default_factory=list)
    payments: dict[int, float] = field(default_factory=dict)


class Simulator:
    """Runs one (configuration, strategy, seed) combination."""

    def __init__(self, config: ScenarioConfig, strategy: Optional[Strategy] = None):
        self.config = config
        self.world = build_scenario(config)
        self.strategy = strategy or create_strategy(config)
        self.accumulator = MetricsAccumulator()
        self.traces = RunTraces()
        self.fading = FadingCache(self._sample_slot_fading)
        self.payments: dict[int, float] = {md.id: 0.0 for md in self.world.mds}
        self.trajectory: list[np.ndarray] = [self.world.uav_positions()]

    def _sample_slot_fading(self, slot: int):
        rng = stream(self.config.seed, Stream.FADING, slot)
        return draw_slot_fading(self.world.mds, self.world.servers, self.config.channel, rng)

    def rate(self, md_id: int, server_id: int, slot: int) -> float:
        md = self.world.mds[md_id]
        server = self.world.server(server_id)
        fading = self.fading.get(md_id, server_id, slot)
        gain = channel_gain(md.position, server, self.config.channel, fading)
        return uplink_rate(md, server, gain, self.config.channel)

    def generate_tasks(self, slot: int) -> list[Task]:
        """Bernoulli arrivals for every device; all draws are made so streams stay aligned."""
        pop = self.config.mds
        rng = stream(self.config.seed, Stream.TASKS, slot)
        count = len(self.world.mds)
        arrivals = rng.random(count) < pop.arrival_probability
        sizes = pop.task_size_mbit.sample(rng, count) * MBIT * pop.task_size_scale
        intensities = pop.intensity_cycles_per_bit.sample(rng, count)
        deadlines = pop.deadline_s.sample(rng, count)
        tasks = []
        for md in self.world.mds:
            if not arrivals[md.id]:
                continue
            task = Task(
                id=self.world.next_task_id,
                md_id=md.id,
                generation_slot=slot,
                size_bits=float(sizes[md.id]),
                intensity=float(intensities[md.id]),
                deadline_s=float(deadlines[md.id]),
            )
            self.world.next_task_id += 1
            self.world.tasks[task.id] = task
            tasks.append(task)
            self.traces.record_event(slot, "generated", task)
        self.accumulator.record_generated(len(tasks))
        return tasks

    def commit(self, decision: SlotDecision, slot: int) -> None:
        """Occupy resources for one decision and charge the device."""
        world = self.world
        grid = world.grid
        task = world.tasks[decision.task_id]
        compute_s = decision.delay_s - task.elapsed_s(slot, grid.slot_duration_s)
        n_slots = grid.slots_for(compute_s)
        if decision.mode == DecisionMode.EDGE:
            server = world.server(decision.server_id)
            try:
                server.commit(
                    Job(task_id=task.id, frequency=decision.trade.f_alloc, start_slot=slot, release_slot=slot + n_slots)
                )
            except ValueError as e:
                logger.error(f"Slot {slot}: cannot commit task {task.id} to server {server.id}: {e}")
                raise
            task.transition(TaskStatus.OFFLOADED)
            task.server_id = server.id
            task.trade = decision.trade
            self.payments[task.md_id] += decision.trade.payment
        else:
            world.mds[task.md_id].busy_until = slot + n_slots
            task.transition(TaskStatus.LOCAL)
        task.start_slot = slot
        task.finish_slot = slot + n_slots - 1
        task.delay_s = decision.delay_s
        task.utility_md = decision.utility_md
        task.utility_server = decision.utility_server
        self.traces.record_event(slot, "offloaded" if decision.mode == DecisionMode.EDGE else "local", task, decision)

    def retire(self, slot: int) -> None:
        """Complete tasks whose last slot is ``slot``; fail pending tasks past their deadline."""
        delta = self.world.grid.slot_duration_s
        for task in self.world.tasks.values():
            if task.status in (TaskStatus.LOCAL, TaskStatus.OFFLOADED) and task.finish_slot == slot:
                task.transition(TaskStatus.COMPLETED)
                self.accumulator.record_completion(task, self.world.grid.slot_duration_s)
                self.traces.record_event(slot, "completed", task)
            elif task.status == TaskStatus.PENDING and (slot + 1 - task.generation_slot) * delta >= task.deadline_s:
                task.transition(TaskStatus.FAILED)
                self.accumulator.record_failure()
                self.traces.record_event(slot, "failed", task)

    def step_slot(self, slot: int) -> list[SlotDecision]:
        world = self.world
        world.slot = slot
        for server in world.servers:
            server.ledger.release(slot)
        self.generate_tasks(slot)

        ctx = SlotContext(
            world=world,
            slot=slot,
            pending=world.pending_tasks(),
            rate=lambda md_id, server_id: self.rate(md_id, server_id, slot),
        )
        decisions = self.strategy.decide(ctx)
        for decision in decisions:
            self.commit(decision, slot)
        self.accumulator.record_slot_utility(system_utility_slot(decisions))
        self.retire(slot)
        self.strategy.observe(world, slot)
        self.fading.cleanup(slot + 1)

        self.traces.record_metrics(slot, self.accumulator.snapshot((slot + 1) * world.grid.slot_duration_s))
        logger.debug(f"Slot {slot}: {len(ctx.pending)} pending, {len(decisions)} decided")
        return decisions

    def step_epoch(self, epoch: int) -> None:
        """Reposition the UAVs for the next epoch, then move the devices."""
        world = self.world
        grid = world.grid
        mobility = self.config.mds.mobility
        params = {
            md.id: GaussMarkovParams(memory=mobility.memory, mean_velocity=md.mean_velocity, asymptotic_std=mobility.asymptotic_std)
            for md in world.mds
        }
        forecast = np.array(
            [predicted_position(md.position, md.velocity, params[md.id], grid, world.area) for md in world.mds]
        ).reshape(-1, 2)
        first, last = epoch * grid.slots_per_epoch, (epoch + 1) * grid.slots_per_epoch
        served = [
            t for t in world.tasks.values()
            if t.server_id is not None and t.start_slot is not None and first <= t.start_slot < last
            and world.server(t.server_id).kind == ServerKind.AERIAL
        ]

        positions, result = self.strategy.plan_uavs(world, served, epoch, forecast)
        if result is not None:
            self.traces.record_sca(epoch, result.history, result.kkt_residual)
        for server, q_next in zip(world.uavs, np.asarray(positions).reshape(-1, 2)):
            q_prev = np.asarray(server.position[:2])
            server.velocity = tuple(float(v) for v in (q_next - q_prev) / grid.epoch_duration_s)
            server.position = (float(q_next[0]), float(q_next[1]), server.position[2])
        self.trajectory.append(world.uav_positions())

        rng = stream(self.config.seed, Stream.MOBILITY, epoch)
        for md in world.mds:
            v_new = md_velocity_step(md.velocity, params[md.id], rng)
            q_next, v_next = md_position_step(md.position, v_new, grid, world.area)
            md.position = (float(q_next[0]), float(q_next[1]))
            md.velocity = (float(v_next[0]), float(v_next[1]))

        self.traces.record_positions(epoch + 1, "uav", [s.id for s in world.uavs], world.uav_positions())
        self.traces.record_positions(epoch + 1, "md", [md.id for md in world.mds], world.md_positions())
        logger.debug(f"Epoch {epoch}: {len(served)} aerial tasks planned")

    def finish(self) -> None:
        """Running tasks count as completed, pending ones as failed."""
        last = self.world.grid.total_slots - 1
        for task in self.world.tasks.values():
            if task.status in (TaskStatus.LOCAL, TaskStatus.OFFLOADED):
                task.transition(TaskStatus.COMPLETED)
                self.accumulator.record_completion(task, self.world.grid.slot_duration_s)
                self.traces.record_event(last, "completed", task)
            elif task.status == TaskStatus.PENDING:
                task.transition(TaskStatus.FAILED)
                self.accumulator.record_failure()
                self.traces.record_event(last, "failed", task)

    def run(self) -> RunResult:
        world = self.world
        grid = world.grid
        self.traces.record_positions(0, "uav", [s.id for s in world.uavs], world.uav_positions())
        self.traces.record_positions(0, "md", [md.id for md in world.mds], world.md_positions())

        for slot in range(grid.total_slots):
            self.step_slot(slot)
            if grid.is_epoch_end(slot):
                epoch = grid.epoch_of(slot)
                self.step_epoch(epoch)
                logger.debug(f"Epoch {epoch} done, cumulative utility {self.accumulator.system_utility:.6g}")
        self.finish()

        report = metrics(self.accumulator, grid.horizon_s)
        trajectory = np.stack(self.trajectory) if world.uavs else np.zeros((len(self.trajectory), 0, 2))
        violations = check_uav_constraints(trajectory, kinematic_limits(self.config), grid) if world.uavs else []
        logger.info(
            f"Run {self.strategy.kind.value} seed={self.config.seed}: utility={report.system_utility:.6g}, "
            f"processing_rate={report.processing_rate / GHZ:.6g} GHz, completion_ratio={report.completion_ratio:.4f}, "
            f"cache={self.fading.stats()}"
        )
        return RunResult(
            config=self.config,
            report=report,
            accumulator=self.accumulator,
            traces=self.traces,
            world=world,
            trajectory=trajectory,
            violations=violations,
            payments=self.payments,
        )


def run(config: ScenarioConfig) -> RunResult:
    """Simulate ``config`` with the strategy it names."""
    return Simulator(config).run()
