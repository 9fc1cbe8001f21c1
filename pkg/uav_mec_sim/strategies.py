"""
Strategy Module.

Per-slot offloading decisions and per-epoch UAV control for the proposed joint scheme and its
baselines. Every strategy sees the same world, the same cached channel realizations and the
same negotiation machinery; they differ only where their descriptions say so.

Key Features:
- TJCCT: negotiated preferences, quota-aware matching and SCA trajectories
- LS: every task runs on its owner's device
- ECRAS: matching as TJCCT, then an equal split of each server's free frequency
- PAS: posted prices adjusted up or down by a fixed factor on utilization
- GCOS: best-response server selection with equal frequency shares
- STCS: TJCCT offloading with straight segment flights to the destinations
"""

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import Optional

import numpy as np

from uav_mec_sim.bargaining import TradeTerms, fixed_allocation_trade, negotiate, posted_price_trade
from uav_mec_sim.config import ScenarioConfig, StrategyConfig, StrategyKind
from uav_mec_sim.matching import build_preferences, finalize_slot_decision, run_matching
from uav_mec_sim.models import MatchingResult, MecServer, SlotDecision, Task, TradeOutcome, WorldState
from uav_mec_sim.scenario import power_params
from uav_mec_sim.trajectory import ScaResult, build_epoch_subproblem, plan_epoch, plan_segments

logger = logging.getLogger(__name__)

RateFn = Callable[[int, int], float]


@dataclass
class SlotContext:
    """What a strategy may read when deciding one slot."""

    world: WorldState
    slot: int
    pending: list[Task]
    rate: RateFn

    def open_servers(self) -> list[MecServer]:
        return [
            s for s in self.world.servers
            if s.idle_cores(self.slot) > 0 and s.available_frequency(self.slot) > 0
        ]


class Strategy:
    """Base strategy: TJCCT decisions and SCA trajectories."""

    kind = StrategyKind.TJCCT

    def __init__(self, config: ScenarioConfig):
        self.config = config
        self.power = power_params(config.uavs)

    @property
    def settings(self) -> StrategyConfig:
        return self.config.strategy

    def terms(self, ctx: SlotContext, task: Task, server: MecServer) -> TradeTerms:
        world = ctx.world
        md = world.mds[task.md_id]
        share = 1
        if self.config.bargaining.propulsion_split == "shared":
            share = server.ledger.busy_cores(ctx.slot) + 1
        return TradeTerms.build(
            task,
            md,
            server,
            rate=ctx.rate(md.id, server.id),
            f_avl=server.available_frequency(ctx.slot),
            elapsed_s=task.elapsed_s(ctx.slot, world.grid.slot_duration_s),
            slot_duration_s=world.grid.slot_duration_s,
            energy_normalizer=self.config.bargaining.qoe_energy_normalizer,
            power=self.power,
            share=share,
        )

    def negotiate(self, ctx: SlotContext, task: Task, server: MecServer) -> Optional[TradeOutcome]:
        return negotiate(self.terms(ctx, task, server), self.config.bargaining)

    def match(self, ctx: SlotContext) -> MatchingResult:
        servers = ctx.open_servers()
        prefs = build_preferences(ctx.pending, servers, lambda t, s: self.negotiate(ctx, t, s))
        return run_matching(
            prefs,
            {s.id: s.idle_cores(ctx.slot) for s in servers},
            {s.id: s.available_frequency(ctx.slot) for s in servers},
        )

    def decide(self, ctx: SlotContext) -> list[SlotDecision]:
        if not ctx.pending:
            return []
        matching = self.match(ctx)
        return finalize_slot_decision(matching, ctx.pending, ctx.world, ctx.slot)

    def observe(self, world: WorldState, slot: int) -> None:
        """Hook called once a slot's decisions are committed."""

    def plan_uavs(
        self, world: WorldState, tasks: Iterable[Task], epoch: int, md_positions: np.ndarray
    ) -> tuple[np.ndarray, Optional[ScaResult]]:
        return plan_epoch(world, tasks, epoch, self.config, md_positions)


class TjcctStrategy(Strategy):
    kind = StrategyKind.TJCCT


class SegmentFlightMixin:
    """UAVs fly straight toward their destinations at the power-optimal speed."""

    config: ScenarioConfig

    def plan_uavs(
        self, world: WorldState, tasks: Iterable[Task], epoch: int, md_positions: np.ndarray
    ) -> tuple[np.ndarray, Optional[ScaResult]]:
        problem = build_epoch_subproblem(world, [], epoch, self.config, md_positions)
        if problem.uav_count == 0:
            return problem.q_cur, None
        return plan_segments(problem, problem.cruise_speed), None


class LocalOnlyStrategy(SegmentFlightMixin, Strategy):
    kind = StrategyKind.LS

    def decide(self, ctx: SlotContext) -> list[SlotDecision]:
        return finalize_slot_decision(MatchingResult(), ctx.pending, ctx.world, ctx.slot)


def equal_share(matching: MatchingResult, available_frequency: dict[int, float]) -> dict[int, float]:
    """Per-task allocation when each server splits its free frequency evenly."""
    shares: dict[int, float] = {}
    for server_id, tasks in matching.matched.items():
        if tasks:
            for task_id in tasks:
                shares[task_id] = available_frequency[server_id] / len(tasks)
    return shares


def baseline_ecras(strategy: Strategy, ctx: SlotContext) -> list[SlotDecision]:
    """Matching as usual, then re-price each matched task at an equal frequency share."""
    matching = strategy.match(ctx)
    f_avl = {s.id: s.available_frequency(ctx.slot) for s in ctx.world.servers}
    shares = equal_share(matching, f_avl)
    tasks = {t.id: t for t in ctx.pending}
    assignment = dict(matching.assignment)
    trades: dict[int, TradeOutcome] = {}
    for task_id, f_alloc in shares.items():
        server = ctx.world.server(matching.assignment[task_id])
        trade = fixed_allocation_trade(strategy.terms(ctx, tasks[task_id], server), f_alloc, strategy.config.bargaining)
        if trade is None:
            assignment[task_id] = None
        else:
            trades[task_id] = trade
    matched = {j: [k for k in ks if assignment.get(k) == j] for j, ks in matching.matched.items()}
    equal = MatchingResult(
        assignment=assignment, matched=matched, trades=trades,
        rejections=matching.rejections, proposals=matching.proposals,
    )
    return finalize_slot_decision(equal, ctx.pending, ctx.world, ctx.slot)


class EqualShareStrategy(Strategy):
    kind = StrategyKind.ECRAS

    def decide(self, ctx: SlotContext) -> list[SlotDecision]:
        if not ctx.pending:
            return []
        return baseline_ecras(self, ctx)


def pas_price_update(price: float, utilization: float, settings: StrategyConfig, price_cap: float) -> float:
    """Raise the posted price by the factor above the utilization threshold, lower it otherwise."""
    if utilization > settings.pas_threshold:
        price *= 1.0 + settings.pas_factor
    else:
        price *= 1.0 - settings.pas_factor
    return min(price_cap, max(settings.pas_min_price_fraction * price_cap, price))


def baseline_pas(strategy: "PostedPriceStrategy", ctx: SlotContext) -> list[SlotDecision]:
    """Devices buy their best allocation at each server's posted price; servers keep the best payers."""
    servers = ctx.open_servers()

    def offer(task: Task, server: MecServer) -> Optional[TradeOutcome]:
        return posted_price_trade(strategy.terms(ctx, task, server), strategy.price_of(server))

    prefs = build_preferences(ctx.pending, servers, offer)
    matching = run_matching(
        prefs,
        {s.id: s.idle_cores(ctx.slot) for s in servers},
        {s.id: s.available_frequency(ctx.slot) for s in servers},
    )
    return finalize_slot_decision(matching, ctx.pending, ctx.world, ctx.slot)


class PostedPriceStrategy(Strategy):
    kind = StrategyKind.PAS

    def __init__(self, config: ScenarioConfig):
        super().__init__(config)
        self.prices: dict[int, float] = {}

    def price_of(self, server: MecServer) -> float:
        if server.id not in self.prices:
            self.prices[server.id] = self.settings.pas_initial_price_fraction * server.price_cap
        return self.prices[server.id]

    def decide(self, ctx: SlotContext) -> list[SlotDecision]:
        if not ctx.pending:
            return []
        return baseline_pas(self, ctx)

    def observe(self, world: WorldState, slot: int) -> None:
        for server in world.servers:
            utilization = server.ledger.committed_frequency(slot) / server.f_total_max
            self.prices[server.id] = pas_price_update(self.price_of(server), utilization, self.settings, server.price_cap)


OutcomeFn = Callable[[Task, int, int], Optional[TradeOutcome]]


def best_response_offloading(
    tasks: list[Task],
    server_ids: list[int],
    outcome_fn: OutcomeFn,
    idle_cores: dict[int, int],
    max_rounds: int,
) -> tuple[dict[int, Optional[int]], int]:
    """Each task in turn picks the server maximizing its own utility given the others' choices.

    ``outcome_fn(task, server_id, sharers)`` prices the trade when ``sharers`` tasks split the
    server. Returns the assignment and the number of rounds played; stops at a round where no
    task changes its choice or at ``max_rounds``.
    """
    choice: dict[int, Optional[int]] = {t.id: None for t in tasks}
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        changed = False
        for task in sorted(tasks, key=lambda t: t.id):
            best: Optional[int] = None
            best_value = 0.0
            for j in server_ids:
                others = sum(1 for k, c in choice.items() if c == j and k != task.id)
                if others >= idle_cores.get(j, 0):
                    continue
                outcome = outcome_fn(task, j, others + 1)
                if outcome is not None and outcome.utility_md > best_value:
                    best, best_value = j, outcome.utility_md
            if best != choice[task.id]:
                choice[task.id] = best
                changed = True
        if not changed:
            break
    else:
        logger.debug(f"Best-response offloading stopped at the round cap {max_rounds}")
    return choice, rounds


def baseline_gcos(strategy: Strategy, ctx: SlotContext) -> list[SlotDecision]:
    servers = {s.id: s for s in ctx.open_servers()}
    tasks = {t.id: t for t in ctx.pending}
    f_avl = {j: s.available_frequency(ctx.slot) for j, s in servers.items()}

    def outcome(task: Task, server_id: int, sharers: int) -> Optional[TradeOutcome]:
        terms = strategy.terms(ctx, task, servers[server_id])
        return fixed_allocation_trade(terms, f_avl[server_id] / sharers, strategy.config.bargaining)

    choice, _ = best_response_offloading(
        list(tasks.values()), sorted(servers), outcome,
        {j: s.idle_cores(ctx.slot) for j, s in servers.items()}, strategy.settings.gcos_max_rounds,
    )
    counts = {j: sum(1 for c in choice.values() if c == j) for j in servers}
    assignment: dict[int, Optional[int]] = {}
    trades: dict[int, TradeOutcome] = {}
    for task_id, j in choice.items():
        trade = outcome(tasks[task_id], j, counts[j]) if j is not None else None
        assignment[task_id] = j if trade is not None else None
        if trade is not None:
            trades[task_id] = trade
    matched = {j: sorted(k for k, c in assignment.items() if c == j) for j in servers}
    result = MatchingResult(assignment=assignment, matched=matched, trades=trades)
    return finalize_slot_decision(result, ctx.pending, ctx.world, ctx.slot)


class GameOffloadingStrategy(Strategy):
    kind = StrategyKind.GCOS

    def decide(self, ctx: SlotContext) -> list[SlotDecision]:
        if not ctx.pending:
            return []
        return baseline_gcos(self, ctx)


def baseline_stcs(strategy: Strategy, ctx: SlotContext) -> list[SlotDecision]:
    """Offloading and allocation exactly as TJCCT; only the flight plan differs."""
    return Strategy.decide(strategy, ctx)


class SegmentTrajectoryStrategy(SegmentFlightMixin, Strategy):
    kind = StrategyKind.STCS

    def decide(self, ctx: SlotContext) -> list[SlotDecision]:
        return baseline_stcs(self, ctx)


STRATEGIES: dict[StrategyKind, type[Strategy]] = {
    StrategyKind.TJCCT: TjcctStrategy,
    StrategyKind.LS: LocalOnlyStrategy,
    StrategyKind.ECRAS: EqualShareStrategy,
    StrategyKind.PAS: PostedPriceStrategy,
    StrategyKind.GCOS: GameOffloadingStrategy,
    StrategyKind.STCS: SegmentTrajectoryStrategy,
}


def create_strategy(config: ScenarioConfig) -> Strategy:
    return STRATEGIES[config.strategy.kind](config)
