"""
Bargaining Module.

Prices and sizes one computing-resource trade between a task owner and an edge server. The
device's best allocation for a given price has a closed form; the price is the break-even
interval between both parties split by the subgame perfect equilibrium of a finite-horizon
alternating-offers game whose discount factors measure each party's patience. The two updates
alternate until they reach a fixed point.

Key Features:
- Closed-form utility-maximizing allocation for a unit price
- Break-even price floor (server) and ceiling (device), capped by budget and price cap
- Exact backward-induction partitions, plus the literal published closed forms
- Contract rule choosing the next proposer from the signs of both utilities
- Optional per-round negotiation trace
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from uav_mec_sim.config import BargainingConfig
from uav_mec_sim.costs import edge_delay, server_task_energy, upload_delay, upload_energy
from uav_mec_sim.models import MecServer, MobileDevice, Proposer, Task, TradeOutcome, UavPowerParams
from uav_mec_sim.utility import UtilityContext, edge_context, md_qoe, satisfaction, server_revenue

logger = logging.getLogger(__name__)


class NoInteriorOptimumError(ValueError):
    """The device utility has no finite maximizer for the given price."""


class NoSurplusError(ValueError):
    """No price leaves both parties with a nonnegative utility."""


class DiscountFactors(BaseModel):
    model_config = ConfigDict(frozen=True)

    md: float = Field(..., ge=0, le=1)
    server: float = Field(..., ge=0, le=1)


class PriceBounds(BaseModel):
    model_config = ConfigDict(frozen=True)

    lower: float
    upper: float

    @property
    def surplus(self) -> float:
        return self.upper - self.lower


class BargainState(BaseModel):
    """Snapshot of one negotiation round."""

    round: int = Field(..., ge=0)
    proposer: Proposer
    f_alloc: float
    p_unit: float
    utility_md: float
    utility_server: float
    horizon: int = Field(..., ge=1)


@dataclass(frozen=True, slots=True)
class TradeTerms:
    """Everything a negotiation between one task and one server depends on."""

    task_id: int
    server_id: int
    size_bits: float
    cycles: float
    deadline_s: float
    elapsed_s: float
    rate: float
    f_avl: float
    upload_energy_j: float
    flight_energy_j: float
    server_capacitance: float
    ctx: UtilityContext

    @classmethod
    def build(
        cls,
        task: Task,
        md: MobileDevice,
        server: MecServer,
        rate: float,
        f_avl: float,
        elapsed_s: float = 0.0,
        slot_duration_s: float = 0.1,
        energy_normalizer: str = "server",
        power: Optional[UavPowerParams] = None,
        share: int = 1,
    ) -> "TradeTerms":
        return cls(
            task_id=task.id,
            server_id=server.id,
            size_bits=task.size_bits,
            cycles=task.total_cycles,
            deadline_s=task.deadline_s,
            elapsed_s=elapsed_s,
            rate=rate,
            f_avl=f_avl,
            upload_energy_j=upload_energy(task.size_bits, md.transmit_power_w, rate),
            flight_energy_j=server_task_energy(0.0, 0.0, server, slot_duration_s, server.speed, power, share),
            server_capacitance=server.capacitance,
            ctx=edge_context(md, server, task, energy_normalizer),
        )

    def delay(self, f_alloc: float) -> float:
        return self.elapsed_s + edge_delay(self.size_bits, self.cycles, self.rate, f_alloc)

    def server_energy(self, f_alloc: float) -> float:
        return self.server_capacitance * f_alloc**2 * self.cycles + self.flight_energy_j

    def md_utility(self, f_alloc: float, p_unit: float) -> float:
        return md_qoe(self.ctx, self.delay(f_alloc), self.upload_energy_j, f_alloc, p_unit)

    def server_utility(self, f_alloc: float, p_unit: float) -> float:
        return server_revenue(self.ctx, f_alloc, p_unit, self.server_energy(f_alloc))


def optimal_allocation(terms: TradeTerms, p_unit: float) -> float:
    """Frequency maximizing the device QoE at unit price ``p_unit`` (not capped)."""
    ctx = terms.ctx
    w = ctx.weight_md
    budget = ctx.payment_budget
    slack = 1.0 + terms.deadline_s - terms.elapsed_s - upload_delay(terms.size_bits, terms.rate)
    if p_unit <= 0 or not math.isfinite(slack) or slack <= 0:
        raise NoInteriorOptimumError(f"No interior optimum at price {p_unit} with delay slack {slack}")
    log_norm = math.log(1.0 + terms.deadline_s)
    radicand = p_unit * terms.cycles * log_norm * (1.0 - w) + 4.0 * budget * w * slack
    if radicand < 0:
        raise NoInteriorOptimumError("Negative radicand in optimal allocation")
    theta = math.sqrt(p_unit * log_norm * (1.0 - w) / terms.cycles) * math.sqrt(radicand)
    denominator = theta - log_norm * p_unit * (1.0 - w)
    if denominator <= 0:
        raise NoInteriorOptimumError("Nonpositive denominator in optimal allocation")
    return 2.0 * w * budget / denominator


def price_bounds(terms: TradeTerms, f_alloc: float) -> PriceBounds:
    """Server break-even floor and device break-even ceiling of the unit price at ``f_alloc``."""
    if f_alloc <= 0:
        raise ValueError("Allocation must be positive")
    ctx = terms.ctx

    energy = terms.server_energy(f_alloc)
    if ctx.weight_server <= 0:
        lower = math.inf if energy > 0 else 0.0
    else:
        lower = (
            (1.0 - ctx.weight_server) * energy / ctx.server_energy_norm
            * ctx.f_server_max * ctx.price_cap / (ctx.weight_server * f_alloc)
        )

    sat = satisfaction(terms.delay(f_alloc), terms.deadline_s)
    if sat == -math.inf:
        raise NoSurplusError("Deadline cannot be met")
    if ctx.weight_md >= 1:
        upper = math.inf
    else:
        upper = (
            ctx.weight_md * sat / (1.0 - ctx.weight_md) - terms.upload_energy_j / ctx.md_energy_norm
        ) * ctx.payment_budget / f_alloc

    if lower > upper:
        raise NoSurplusError(f"Price floor {lower} exceeds ceiling {upper}")
    return PriceBounds(lower=lower, upper=upper)


def capped_price_bounds(terms: TradeTerms, f_alloc: float) -> PriceBounds:
    """Break-even bounds with the ceiling also limited by the payment budget and the price cap."""
    bounds = price_bounds(terms, f_alloc)
    upper = min(bounds.upper, terms.ctx.payment_budget / f_alloc, terms.ctx.price_cap)
    if bounds.lower > upper:
        raise NoSurplusError(f"Price floor {bounds.lower} exceeds capped ceiling {upper}")
    return PriceBounds(lower=bounds.lower, upper=upper)


def discount_factors(terms: TradeTerms, f_alloc: float) -> DiscountFactors:
    tau = terms.deadline_s
    lam_md = 1.0 - upload_delay(terms.size_bits, terms.rate) / tau
    lam_server = 1.0 - terms.cycles / (f_alloc * tau)
    return DiscountFactors(md=min(1.0, max(0.0, lam_md)), server=min(1.0, max(0.0, lam_server)))


def _geometric_sum(ratio: float, terms: int) -> float:
    if math.isclose(ratio, 1.0, abs_tol=1e-12):
        return float(terms)
    return (1.0 - ratio**terms) / (1.0 - ratio)


def first_mover_share(lam_proposer: float, lam_responder: float, horizon: int) -> float:
    """Equilibrium share of the party proposing first in a ``horizon``-period game.

    The last proposer takes everything; each earlier proposer leaves the responder exactly
    its discounted continuation value.
    """
    pairs = horizon // 2
    share = (1.0 - lam_responder) * _geometric_sum(lam_proposer * lam_responder, pairs)
    if horizon % 2 == 1:
        share += (lam_proposer * lam_responder) ** pairs
    return share


def spe_partition(
    lam_md: float, lam_server: float, horizon: int, proposer: Proposer, form: str = "exact"
) -> tuple[float, float]:
    """Shares (device, server) of the surplus when ``proposer`` opens the game."""
    if horizon < 1:
        raise ValueError("Bargaining horizon must be at least one period")
    if form == "printed":
        ratio_sum = _geometric_sum(lam_md * lam_server, math.ceil(horizon / 2))
        if proposer == Proposer.MD:
            xi_md = lam_md - (1.0 - lam_md) * ratio_sum
        else:
            xi_md = (1.0 - lam_server) * ratio_sum
        return xi_md, 1.0 - xi_md
    if proposer == Proposer.MD:
        xi_md = first_mover_share(lam_md, lam_server, horizon)
        return xi_md, 1.0 - xi_md
    xi_server = first_mover_share(lam_server, lam_md, horizon)
    return 1.0 - xi_server, xi_server


def consensus_price(bounds: PriceBounds, partition: tuple[float, float]) -> float:
    """Price at which the device's bid equals the server's ask."""
    surplus = bounds.surplus
    if surplus < 0:
        raise NoSurplusError("Negative surplus")
    xi_md, xi_server = partition
    bid = bounds.upper - surplus * xi_md
    ask = bounds.lower + surplus * xi_server
    if not math.isclose(bid, ask, rel_tol=1e-9, abs_tol=1e-12 * max(1.0, abs(bounds.upper))):
        raise ValueError(f"Bid {bid} and ask {ask} disagree; shares must sum to one")
    return bid


def next_proposer(utility_md: float, utility_server: float, current: Proposer) -> Proposer:
    """Contract rule on utility signs.

    The offer passes to whichever side still profits. A mutually profitable state keeps the
    current proposer, so offers do not alternate every round: the two first-mover prices differ
    by more than the convergence tolerance and a strict swap would never settle. When both sides
    lose the device proposes.
    """
    if utility_md > 0 and utility_server > 0:
        return current
    if utility_md > 0:
        return Proposer.MD
    if utility_server > 0:
        return Proposer.SERVER
    return Proposer.MD


def _price_at(terms: TradeTerms, f_alloc: float, proposer: Proposer, settings: BargainingConfig) -> tuple[PriceBounds, float]:
    bounds = capped_price_bounds(terms, f_alloc)
    lam = discount_factors(terms, f_alloc)
    xi_md, _ = spe_partition(lam.md, lam.server, settings.horizon, proposer, settings.partition_form)
    xi_md = min(1.0, max(0.0, xi_md))
    return bounds, consensus_price(bounds, (xi_md, 1.0 - xi_md))


def negotiate(
    terms: TradeTerms, settings: BargainingConfig, trace: Optional[list[BargainState]] = None
) -> Optional[TradeOutcome]:
    """Alternate price and allocation updates from ``f = f_avl``; ``None`` when no deal exists."""
    if terms.f_avl <= 0 or terms.rate <= 0:
        return None

    f_alloc = terms.f_avl
    proposer = Proposer.MD
    p_prev: Optional[float] = None
    rounds = 0
    try:
        for rounds in range(1, settings.max_rounds + 1):
            _, p_unit = _price_at(terms, f_alloc, proposer, settings)
            u_md = terms.md_utility(f_alloc, p_unit)
            u_server = terms.server_utility(f_alloc, p_unit)
            if trace is not None:
                trace.append(
                    BargainState(
                        round=rounds, proposer=proposer, f_alloc=f_alloc, p_unit=p_unit,
                        utility_md=u_md, utility_server=u_server, horizon=settings.horizon,
                    )
                )
            proposer = next_proposer(u_md, u_server, proposer)

            if p_unit <= 0:
                f_next = terms.f_avl
            else:
                f_next = min(optimal_allocation(terms, p_unit), terms.f_avl)

            f_stable = abs(f_next - f_alloc) <= settings.tolerance * f_alloc
            p_stable = p_prev is not None and abs(p_unit - p_prev) <= settings.tolerance * max(abs(p_unit), 1e-300)
            f_alloc = f_next
            p_prev = p_unit
            if f_stable and p_stable:
                break

        bounds, p_unit = _price_at(terms, f_alloc, proposer, settings)
    except (NoSurplusError, NoInteriorOptimumError) as e:
        logger.debug(f"Task {terms.task_id} / server {terms.server_id}: no trade ({e})")
        return None

    u_md = terms.md_utility(f_alloc, p_unit)
    u_server = terms.server_utility(f_alloc, p_unit)
    if not (u_md > 0 and u_server > 0):
        logger.debug(f"Task {terms.task_id} / server {terms.server_id}: no mutually positive deal")
        return None

    return TradeOutcome(
        f_alloc=f_alloc,
        p_unit=p_unit,
        utility_md=u_md,
        utility_server=u_server,
        rounds=rounds,
        proposer=proposer,
        p_lower=bounds.lower,
        p_upper=bounds.upper,
        rate=terms.rate,
    )


def fixed_allocation_trade(
    terms: TradeTerms, f_alloc: float, settings: BargainingConfig, proposer: Proposer = Proposer.MD
) -> Optional[TradeOutcome]:
    """Consensus price for an allocation fixed by someone else (equal-share baseline)."""
    if f_alloc <= 0:
        return None
    try:
        bounds, p_unit = _price_at(terms, f_alloc, proposer, settings)
    except NoSurplusError:
        return None
    u_md = terms.md_utility(f_alloc, p_unit)
    u_server = terms.server_utility(f_alloc, p_unit)
    if not (u_md > 0 and u_server > 0):
        return None
    return TradeOutcome(
        f_alloc=f_alloc, p_unit=p_unit, utility_md=u_md, utility_server=u_server, rounds=1,
        proposer=proposer, p_lower=bounds.lower, p_upper=bounds.upper, rate=terms.rate,
    )


def posted_price_trade(terms: TradeTerms, p_unit: float) -> Optional[TradeOutcome]:
    """Device takes its best allocation at a posted price (price-adjustment baseline)."""
    try:
        f_alloc = min(optimal_allocation(terms, p_unit), terms.f_avl)
    except NoInteriorOptimumError:
        return None
    if f_alloc <= 0 or f_alloc * p_unit > terms.ctx.payment_budget:
        return None
    u_md = terms.md_utility(f_alloc, p_unit)
    u_server = terms.server_utility(f_alloc, p_unit)
    if not (u_md > 0 and u_server > 0):
        return None
    return TradeOutcome(
        f_alloc=f_alloc, p_unit=p_unit, utility_md=u_md, utility_server=u_server, rounds=1,
        proposer=Proposer.SERVER, rate=terms.rate,
    )
