"""
Matching Module.

Many-to-one matching of pending tasks to edge servers. Every (task, server) pair is priced by a
negotiation first; tasks then propose in order of their own utility while each server keeps its
most valuable proposals that fit its idle cores and free frequency.

Key Features:
- Preference lists from negotiated trades, positive utilities only
- Deterministic tie-break by (utility desc, id asc)
- Deferred acceptance with joint core and frequency quotas
- Re-proposal pass removing pairs a server would still accept
- Slot decision finalization with local fallback
"""

import logging
from collections import deque
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from typing import Optional

from uav_mec_sim.costs import local_delay, local_energy
from uav_mec_sim.models import (
    DecisionMode, MatchingResult, MecServer, Rejection, SlotDecision, Task, TradeOutcome, WorldState,
)
from uav_mec_sim.utility import local_context, md_qoe

logger = logging.getLogger(__name__)

Negotiator = Callable[[Task, MecServer], Optional[TradeOutcome]]


@dataclass(frozen=True, slots=True)
class PreferenceEntry:
    server_id: int
    value: float
    trade: TradeOutcome


@dataclass
class PreferenceTable:
    """Per-task server lists (best first) and per-server task values."""

    task_lists: dict[int, list[PreferenceEntry]] = field(default_factory=dict)
    server_values: dict[int, dict[int, float]] = field(default_factory=dict)

    def trade(self, task_id: int, server_id: int) -> TradeOutcome:
        for entry in self.task_lists[task_id]:
            if entry.server_id == server_id:
                return entry.trade
        raise KeyError(f"Task {task_id} has no entry for server {server_id}")

    def rank(self, task_id: int, server_id: Optional[int]) -> int:
        """Position of ``server_id`` in the task's list; unmatched ranks after every server."""
        entries = self.task_lists[task_id]
        for idx, entry in enumerate(entries):
            if entry.server_id == server_id:
                return idx
        return len(entries)

    @classmethod
    def from_trades(cls, trades: dict[tuple[int, int], TradeOutcome]) -> "PreferenceTable":
        """Table from already negotiated trades keyed by (task, server)."""
        table = cls()
        for (task_id, server_id), trade in trades.items():
            table.task_lists.setdefault(task_id, [])
            if trade is not None and trade.utility_md > 0:
                table.task_lists[task_id].append(PreferenceEntry(server_id, trade.utility_md, trade))
                table.server_values.setdefault(server_id, {})[task_id] = trade.utility_server
        for entries in table.task_lists.values():
            entries.sort(key=lambda e: (-e.value, e.server_id))
        return table


def build_preferences(tasks: Iterable[Task], servers: Iterable[MecServer], negotiator: Negotiator) -> PreferenceTable:
    """Negotiate every (task, server) pair and rank the profitable ones."""
    servers = list(servers)
    trades: dict[tuple[int, int], Optional[TradeOutcome]] = {}
    for task in tasks:
        for server in servers:
            trades[(task.id, server.id)] = negotiator(task, server)
    return PreferenceTable.from_trades(trades)


def retain(
    server_id: int, candidates: list[int], prefs: PreferenceTable, cores: int, frequency: float
) -> tuple[list[int], list[tuple[int, str]]]:
    """Greedy retention by server value under the core and frequency quotas."""
    values = prefs.server_values.get(server_id, {})
    order = sorted(candidates, key=lambda k: (-values[k], k))
    kept: list[int] = []
    rejected: list[tuple[int, str]] = []
    used = 0.0
    for task_id in order:
        f_alloc = prefs.trade(task_id, server_id).f_alloc
        if len(kept) >= cores:
            rejected.append((task_id, "cores"))
        elif used + f_alloc > frequency * (1 + 1e-12):
            rejected.append((task_id, "frequency"))
        else:
            kept.append(task_id)
            used += f_alloc
    return kept, rejected


def run_matching(
    prefs: PreferenceTable, idle_cores: dict[int, int], available_frequency: dict[int, float]
) -> MatchingResult:
    """Task-proposing deferred acceptance under joint quotas."""
    tasks = sorted(prefs.task_lists)
    pointer = {k: 0 for k in tasks}
    assignment: dict[int, Optional[int]] = {k: None for k in tasks}
    held: dict[int, list[int]] = {j: [] for j in idle_cores}
    rejections: list[Rejection] = []
    proposals = 0
    queue = deque(tasks)

    def propose_all() -> None:
        nonlocal proposals
        while queue:
            k = queue.popleft()
            entries = prefs.task_lists[k]
            if pointer[k] >= len(entries):
                assignment[k] = None
                continue
            j = entries[pointer[k]].server_id
            pointer[k] += 1
            proposals += 1
            kept, rejected = retain(j, held[j] + [k], prefs, idle_cores.get(j, 0), available_frequency.get(j, 0.0))
            held[j] = kept
            for task_id, reason in rejected:
                rejections.append(Rejection(task_id=task_id, server_id=j, reason=reason))
                if assignment[task_id] == j or task_id == k:
                    assignment[task_id] = None
                    queue.append(task_id)
            if k in kept:
                assignment[k] = j

    def find_blocking() -> Optional[tuple[int, int]]:
        for k in tasks:
            current = prefs.rank(k, assignment[k])
            for entry in prefs.task_lists[k][:current]:
                j = entry.server_id
                kept, _ = retain(j, held[j] + [k], prefs, idle_cores.get(j, 0), available_frequency.get(j, 0.0))
                if k in kept:
                    return k, j
        return None

    propose_all()
    stable = False
    for _ in range(4 * max(1, len(tasks)) * max(1, len(idle_cores))):
        blocking = find_blocking()
        if blocking is None:
            stable = True
            break
        k, j = blocking
        if assignment[k] is not None:
            held[assignment[k]].remove(k)
            assignment[k] = None
        pointer[k] = prefs.rank(k, j)
        queue.append(k)
        propose_all()
    if not stable and find_blocking() is None:
        stable = True
    if not stable:
        logger.warning("Matching re-proposal pass hit its iteration cap with blocking pairs left")

    matched = {j: sorted(ks) for j, ks in held.items()}
    trades = {k: prefs.trade(k, j) for k, j in assignment.items() if j is not None}
    return MatchingResult(
        assignment=assignment, matched=matched, trades=trades, rejections=rejections, proposals=proposals, stable=stable
    )


def local_decision(task: Task, world: WorldState, slot: int) -> Optional[SlotDecision]:
    """Local execution on the owner's core, when its QoE is positive."""
    md = world.mds[task.md_id]
    delay = task.elapsed_s(slot, world.grid.slot_duration_s) + local_delay(task.total_cycles, md.f_max)
    energy = local_energy(task.total_cycles, md.f_max, md.capacitance)
    utility = md_qoe(local_context(md, task), delay, energy)
    if utility <= 0:
        return None
    return SlotDecision(task_id=task.id, mode=DecisionMode.LOCAL, delay_s=delay, utility_md=utility)


def edge_decision(task: Task, server_id: int, trade: TradeOutcome, world: WorldState, slot: int) -> SlotDecision:
    delay = task.elapsed_s(slot, world.grid.slot_duration_s) + task.size_bits / trade.rate + task.total_cycles / trade.f_alloc
    return SlotDecision(
        task_id=task.id, mode=DecisionMode.EDGE, server_id=server_id, trade=trade, delay_s=delay,
        utility_md=trade.utility_md, utility_server=trade.utility_server,
    )


def finalize_slot_decision(
    matching: MatchingResult, pending: Iterable[Task], world: WorldState, slot: int, allow_local: bool = True
) -> list[SlotDecision]:
    """Matched tasks are offloaded; the rest run locally when profitable on an idle core."""
    decisions: list[SlotDecision] = []
    claimed_cores: set[int] = set()
    for task in sorted(pending, key=lambda t: t.id):
        server_id = matching.server_of(task.id)
        if server_id is not None:
            decisions.append(edge_decision(task, server_id, matching.trades[task.id], world, slot))
            continue
        if not allow_local or task.md_id in claimed_cores or not world.mds[task.md_id].is_idle(slot):
            continue
        decision = local_decision(task, world, slot)
        if decision is not None:
            decisions.append(decision)
            claimed_cores.add(task.md_id)
    return decisions
