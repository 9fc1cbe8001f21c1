"""
Utility Module.

Quality of experience of mobile devices, revenue of edge servers and the per-slot system
utility. All three are normalized, weighted differences between a benefit and its costs.

Key Features:
- Log satisfaction of meeting the deadline, -inf when the deadline is missed
- Energy and payment costs normalized by budgets
- Revenue linear in the unit price
- Context objects carrying every normalizer of a (task, party) pair
"""

import math
from collections.abc import Iterable

from pydantic import BaseModel, ConfigDict, Field

from uav_mec_sim.models import DecisionMode, MecServer, MobileDevice, SlotDecision, Task


class UtilityContext(BaseModel):
    """Normalizers and weights for evaluating one task's utilities."""

    model_config = ConfigDict(frozen=True)

    deadline_s: float = Field(..., gt=0)
    weight_md: float = Field(..., ge=0, le=1)
    weight_server: float = Field(default=0.0, ge=0, le=1)
    md_energy_norm: float = Field(..., gt=0)
    server_energy_norm: float = Field(default=1.0, gt=0)
    payment_budget: float = Field(..., gt=0)
    f_server_max: float = Field(default=1.0, gt=0)
    price_cap: float = Field(default=1.0, gt=0)
    mode: DecisionMode = DecisionMode.LOCAL


def local_context(md: MobileDevice, task: Task) -> UtilityContext:
    return UtilityContext(
        deadline_s=task.deadline_s,
        weight_md=md.weight,
        md_energy_norm=md.energy_budget_j,
        payment_budget=md.payment_budget,
        mode=DecisionMode.LOCAL,
    )


def edge_context(md: MobileDevice, server: MecServer, task: Task, energy_normalizer: str = "server") -> UtilityContext:
    """Context for offloading ``task`` to ``server``; the MD's upload energy is normalized by
    the server budget or the device budget according to ``energy_normalizer``."""
    return UtilityContext(
        deadline_s=task.deadline_s,
        weight_md=md.weight,
        weight_server=server.weight,
        md_energy_norm=server.energy_budget_j if energy_normalizer == "server" else md.energy_budget_j,
        server_energy_norm=server.energy_budget_j,
        payment_budget=md.payment_budget,
        f_server_max=server.f_total_max,
        price_cap=server.price_cap,
        mode=DecisionMode.EDGE,
    )


def satisfaction(delay_s: float, deadline_s: float) -> float:
    if delay_s >= deadline_s:
        return -math.inf
    return math.log(1.0 + deadline_s - delay_s) / math.log(1.0 + deadline_s)


def md_qoe(ctx: UtilityContext, delay_s: float, energy_j: float, f_alloc: float = 0.0, p_unit: float = 0.0) -> float:
    """Device QoE; payment enters only in edge mode."""
    sat = satisfaction(delay_s, ctx.deadline_s)
    if sat == -math.inf:
        return -math.inf
    cost = energy_j / ctx.md_energy_norm
    if ctx.mode == DecisionMode.EDGE:
        cost += f_alloc * p_unit / ctx.payment_budget
    return ctx.weight_md * sat - (1.0 - ctx.weight_md) * cost


def server_revenue(ctx: UtilityContext, f_alloc: float, p_unit: float, energy_j: float) -> float:
    reward = f_alloc * p_unit / (ctx.f_server_max * ctx.price_cap)
    return ctx.weight_server * reward - (1.0 - ctx.weight_server) * energy_j / ctx.server_energy_norm


def system_utility_slot(decisions: Iterable[SlotDecision]) -> float:
    """Sum of device and server utilities over the tasks decided in a slot."""
    total = 0.0
    for d in decisions:
        total += d.utility_md
        if d.mode == DecisionMode.EDGE:
            total += d.utility_server
    return total
