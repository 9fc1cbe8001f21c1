"""
Trajectory Control Module.

Per-epoch UAV repositioning by successive convex approximation. With offloading decisions and
allocations fixed, each UAV's next position trades the mean-channel QoE of the tasks it serves
against its propulsion energy. The nonconvex pieces get surrogates that are tight at the
expansion point and never exceed the true quantities:

- mean rate: tangent of the convex rate-versus-squared-distance curve
- induced power: smallest auxiliary value satisfying a linearized epigraph constraint
- pairwise separation: first-order expansion of the squared distance

Each surrogate problem is concave and solved by the log-barrier method in ``solver``.
"""

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from uav_mec_sim.channel import aerial_los_probability, mean_gain_constant
from uav_mec_sim.config import ScenarioConfig, TrajectoryConfig
from uav_mec_sim.costs import min_power_speed, propulsion_power
from uav_mec_sim.models import ServerKind, Task, UavPowerParams, WorldState
from uav_mec_sim.scenario import kinematic_limits, power_params
from uav_mec_sim.solver import BarrierSettings, InfeasibleSubproblemError, find_strictly_feasible, maximize_concave
from uav_mec_sim.utility import edge_context

logger = logging.getLogger(__name__)

SCA_MONOTONE_SLACK = 1e-9


def mean_rate(sq_dist, bandwidth, a2, height: float, beta: float):
    """Rate under the mean channel as a function of the squared horizontal distance."""
    snr = a2 * (height**2 + np.asarray(sq_dist, dtype=float)) ** (-beta / 2.0)
    return bandwidth * np.log2(1.0 + snr)


def mean_rate_slope(sq_dist, bandwidth, a2, height: float, beta: float):
    s = height**2 + np.asarray(sq_dist, dtype=float)
    snr = a2 * s ** (-beta / 2.0)
    return bandwidth / math.log(2.0) * (-beta / 2.0) * snr / (s * (1.0 + snr))


def taylor_rate_bound(q, q_hat, md_pos, bandwidth: float, a2: float, height: float, beta: float) -> float:
    """Global lower bound on the mean rate, exact at ``q_hat``."""
    x = float(np.sum((np.asarray(q, dtype=float) - md_pos) ** 2))
    x_hat = float(np.sum((np.asarray(q_hat, dtype=float) - md_pos) ** 2))
    rate = float(mean_rate(x_hat, bandwidth, a2, height, beta))
    return rate + float(mean_rate_slope(x_hat, bandwidth, a2, height, beta)) * (x - x_hat)


def induced_phi(speed, eta3: float):
    """Exact auxiliary value phi(v) = sqrt(sqrt(eta3 + v^4/4) - v^2/2)."""
    v2 = np.asarray(speed, dtype=float) ** 2
    return np.sqrt(eta3 / (np.sqrt(eta3 + v2 * v2 / 4.0) + v2 / 2.0))


def epigraph_rhs(phi: float, q, q_hat, phi_hat: float, q_cur, tau0: float) -> float:
    """Linearization of phi^2 + v^2 at (phi_hat, q_hat)."""
    q, q_hat, q_cur = (np.asarray(a, dtype=float) for a in (q, q_hat, q_cur))
    d_hat = q_hat - q_cur
    w = (float(d_hat @ d_hat) + 2.0 * float(d_hat @ (q - q_hat))) / tau0**2
    return phi_hat**2 + 2.0 * phi_hat * (phi - phi_hat) + w


def phi_epigraph(phi: float, q, q_hat, phi_hat: float, q_cur, tau0: float, eta3: float) -> float:
    """Residual of eta3/phi^2 <= linearized (phi^2 + v^2); feasible when nonpositive."""
    if phi <= 0:
        raise ValueError("Auxiliary propulsion variable must be positive")
    return eta3 / phi**2 - epigraph_rhs(phi, q, q_hat, phi_hat, q_cur, tau0)


def phi_root(w: float, phi_hat: float, eta3: float) -> float:
    """Unique positive root of eta3/phi^2 = phi_hat^2 + 2 phi_hat (phi - phi_hat) + w."""

    def residual(phi: float) -> float:
        return eta3 / phi**2 - 2.0 * phi_hat * phi + phi_hat**2 - w

    # strictly decreasing on phi > 0: bracket around phi_hat, then Brent
    lo = hi = phi_hat
    while residual(lo) <= 0:
        lo *= 0.5
    while residual(hi) >= 0:
        hi *= 2.0
    return float(brentq(residual, lo, hi, xtol=1e-14 * phi_hat))


def linearized_safe_distance(q_a, q_b, q_a_hat, q_b_hat) -> float:
    """Lower bound on the squared distance between two UAVs, exact at the expansion points."""
    delta_hat = np.asarray(q_a_hat, dtype=float) - np.asarray(q_b_hat, dtype=float)
    delta = np.asarray(q_a, dtype=float) - np.asarray(q_b, dtype=float)
    return -float(delta_hat @ delta_hat) + 2.0 * float(delta_hat @ delta)


@dataclass(frozen=True)
class LinkTerm:
    """One aerial-offloaded task as seen by the trajectory objective."""

    task_id: int
    uav: int
    md_position: tuple[float, float]
    size_bits: float
    slack: float
    theta0: float
    theta2: float
    a2: float
    bandwidth: float


@dataclass
class EpochProblem:
    """Data of one epoch's repositioning problem; UAVs are indexed by row."""

    epoch: int
    uav_ids: list[int]
    q_cur: np.ndarray
    q_final: np.ndarray
    area: tuple[float, float]
    step: float
    reach: float
    d_safe: float
    tau0: float
    altitude: float
    beta: float
    power: UavPowerParams
    theta3: np.ndarray
    cruise_speed: float
    links: list[LinkTerm] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.q_cur = np.asarray(self.q_cur, dtype=float).reshape(-1, 2)
        self.q_final = np.asarray(self.q_final, dtype=float).reshape(-1, 2)
        self.theta3 = np.asarray(self.theta3, dtype=float)
        self.link_uav = np.array([k.uav for k in self.links], dtype=int)
        self.link_md = np.array([k.md_position for k in self.links], dtype=float).reshape(-1, 2)
        self.link_size = np.array([k.size_bits for k in self.links], dtype=float)
        self.link_slack = np.array([k.slack for k in self.links], dtype=float)
        self.link_theta0 = np.array([k.theta0 for k in self.links], dtype=float)
        self.link_theta2 = np.array([k.theta2 for k in self.links], dtype=float)
        self.link_a2 = np.array([k.a2 for k in self.links], dtype=float)
        self.link_bw = np.array([k.bandwidth for k in self.links], dtype=float)

    @property
    def uav_count(self) -> int:
        return self.q_cur.shape[0]

    def rates(self, q: np.ndarray) -> np.ndarray:
        diff = q[self.link_uav] - self.link_md
        return mean_rate(np.sum(diff * diff, axis=1), self.link_bw, self.link_a2, self.altitude, self.beta)


@dataclass(frozen=True)
class Expansion:
    """Surrogate expansion point."""

    q_hat: np.ndarray
    phi_hat: np.ndarray
    x_hat: np.ndarray
    rate_hat: np.ndarray
    slope_hat: np.ndarray

    @classmethod
    def at(cls, problem: EpochProblem, q_hat: np.ndarray) -> "Expansion":
        q_hat = np.asarray(q_hat, dtype=float).reshape(-1, 2)
        speed = np.linalg.norm(q_hat - problem.q_cur, axis=1) / problem.tau0
        diff = q_hat[problem.link_uav] - problem.link_md
        x_hat = np.sum(diff * diff, axis=1)
        return cls(
            q_hat=q_hat,
            phi_hat=induced_phi(speed, problem.power.eta3),
            x_hat=x_hat,
            rate_hat=mean_rate(x_hat, problem.link_bw, problem.link_a2, problem.altitude, problem.beta),
            slope_hat=mean_rate_slope(x_hat, problem.link_bw, problem.link_a2, problem.altitude, problem.beta),
        )

    def w(self, problem: EpochProblem, q: np.ndarray) -> np.ndarray:
        d_hat = self.q_hat - problem.q_cur
        return (np.sum(d_hat * d_hat, axis=1) + 2.0 * np.sum(d_hat * (q - self.q_hat), axis=1)) / problem.tau0**2

    def bounds(self, problem: EpochProblem, q: np.ndarray) -> np.ndarray:
        diff = q[problem.link_uav] - problem.link_md
        return self.rate_hat + self.slope_hat * (np.sum(diff * diff, axis=1) - self.x_hat)

    def phis(self, problem: EpochProblem, q: np.ndarray) -> np.ndarray:
        w = self.w(problem, q)
        return np.array([phi_root(w[j], self.phi_hat[j], problem.power.eta3) for j in range(problem.uav_count)])


@dataclass
class ScaIterate:
    positions: np.ndarray
    rates: np.ndarray
    phi: np.ndarray
    objective: float
    kkt_residual: float = 0.0
    converged: bool = True


@dataclass
class ScaResult:
    positions: np.ndarray
    objective: float
    history: list[float]
    iterations: int
    converged: bool
    capped: bool = False
    kkt_residual: float = 0.0
    last_iterate: Optional[ScaIterate] = None


def _link_value(problem: EpochProblem, rate: np.ndarray) -> float:
    if problem.link_size.size == 0:
        return 0.0
    if np.any(rate * problem.link_slack <= problem.link_size):
        return -math.inf
    inv = problem.link_size / rate
    return float(np.sum(problem.link_theta0 * np.log(problem.link_slack - inv) - problem.link_theta2 * inv))


def approximate_objective(problem: EpochProblem, q) -> float:
    """Mean-channel QoE of the served tasks minus normalized propulsion energy at positions ``q``."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    value = _link_value(problem, problem.rates(q))
    speed = np.linalg.norm(q - problem.q_cur, axis=1) / problem.tau0
    power = np.atleast_1d(propulsion_power(speed, problem.power))
    return value - float(np.sum(problem.theta3 * problem.tau0 * power))


def surrogate_objective(problem: EpochProblem, exp: Expansion, x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
    """Concave minorant of ``approximate_objective`` with its gradient and Hessian."""
    n = problem.uav_count
    q = np.asarray(x, dtype=float).reshape(n, 2)
    grad = np.zeros((n, 2))
    hess = np.zeros((2 * n, 2 * n))
    eye = np.eye(2)

    value = 0.0
    if problem.links:
        rate = exp.bounds(problem, q)
        value = _link_value(problem, rate)
        if not math.isfinite(value):
            return -math.inf, grad.ravel(), hess
        size, slack = problem.link_size, problem.link_slack
        t0, t2 = problem.link_theta0, problem.link_theta2
        u = slack - size / rate
        du = size / rate**2
        ddu = -2.0 * size / rate**3
        h1 = t0 * du / u + t2 * size / rate**2
        h2 = t0 * (ddu / u - (du / u) ** 2) - 2.0 * t2 * size / rate**3
        diff = q[problem.link_uav] - problem.link_md
        d_rate = 2.0 * exp.slope_hat[:, None] * diff
        for k, j in enumerate(problem.link_uav):
            grad[j] += h1[k] * d_rate[k]
            block = h2[k] * np.outer(d_rate[k], d_rate[k]) + h1[k] * 2.0 * exp.slope_hat[k] * eye
            hess[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] += block

    p = problem.power
    tau0 = problem.tau0
    w = exp.w(problem, q)
    for j in range(n):
        d = q[j] - problem.q_cur[j]
        dist = float(np.linalg.norm(d))
        phi = phi_root(w[j], exp.phi_hat[j], p.eta3)
        blade = p.eta1 * (1.0 + 3.0 * dist**2 / (tau0**2 * p.tip_speed**2))
        parasite = p.eta4 * dist**3 / tau0**3
        power = blade + p.eta2 * phi + parasite

        g_blade = p.eta1 * 6.0 * d / (tau0**2 * p.tip_speed**2)
        h_blade = p.eta1 * 6.0 / (tau0**2 * p.tip_speed**2) * eye
        g_par = 3.0 * p.eta4 * dist * d / tau0**3
        h_par = 3.0 * p.eta4 / tau0**3 * (dist * eye + (np.outer(d, d) / dist if dist > 0 else 0.0))
        grad_w = 2.0 * (exp.q_hat[j] - problem.q_cur[j]) / tau0**2
        g_phi = -2.0 * p.eta3 / phi**3 - 2.0 * exp.phi_hat[j]
        g_phiphi = 6.0 * p.eta3 / phi**4
        g_ind = p.eta2 * grad_w / g_phi
        h_ind = p.eta2 * (-g_phiphi / g_phi**3) * np.outer(grad_w, grad_w)

        scale = problem.theta3[j] * tau0
        value -= scale * power
        grad[j] -= scale * (g_blade + g_par + g_ind)
        hess[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] -= scale * (h_blade + h_par + h_ind)

    return value, grad.ravel(), hess


def subproblem_constraints(
    problem: EpochProblem, exp: Expansion, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized convex constraints g(x) <= 0 of the surrogate problem."""
    n = problem.uav_count
    q = np.asarray(x, dtype=float).reshape(n, 2)
    values: list[float] = []
    jac: list[np.ndarray] = []
    hess: list[np.ndarray] = []
    zero_h = np.zeros((2 * n, 2 * n))

    def add(value: float, rows: dict[int, np.ndarray], h: Optional[np.ndarray] = None) -> None:
        row = np.zeros(2 * n)
        for j, g in rows.items():
            row[2 * j : 2 * j + 2] += g
        values.append(value)
        jac.append(row)
        hess.append(zero_h if h is None else h)

    def block(j: int, mat: np.ndarray) -> np.ndarray:
        h = np.zeros((2 * n, 2 * n))
        h[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = mat
        return h

    for j in range(n):
        for axis, upper in enumerate(problem.area):
            unit = np.zeros(2)
            unit[axis] = 1.0 / upper
            add(-q[j, axis] / upper, {j: -unit})
            add((q[j, axis] - upper) / upper, {j: unit})

        d = q[j] - problem.q_cur[j]
        add(float(d @ d) / problem.step**2 - 1.0, {j: 2.0 * d / problem.step**2}, block(j, 2.0 / problem.step**2 * np.eye(2)))

        e = q[j] - problem.q_final[j]
        add(float(e @ e) / problem.reach**2 - 1.0, {j: 2.0 * e / problem.reach**2}, block(j, 2.0 / problem.reach**2 * np.eye(2)))

    d2 = problem.d_safe**2
    for a in range(n):
        for b in range(a + 1, n):
            delta_hat = exp.q_hat[a] - exp.q_hat[b]
            approx = linearized_safe_distance(q[a], q[b], exp.q_hat[a], exp.q_hat[b])
            add(1.0 - approx / d2, {a: -2.0 * delta_hat / d2, b: 2.0 * delta_hat / d2})

    if problem.links:
        rate = exp.bounds(problem, q)
        floor = problem.link_size / problem.link_slack
        diff = q[problem.link_uav] - problem.link_md
        for k, j in enumerate(problem.link_uav):
            grad_rate = 2.0 * exp.slope_hat[k] * diff[k]
            add(1.0 - rate[k] / floor[k], {j: -grad_rate / floor[k]}, block(j, -2.0 * exp.slope_hat[k] / floor[k] * np.eye(2)))

    return np.array(values), np.array(jac).reshape(len(values), 2 * n), np.array(hess).reshape(len(values), 2 * n, 2 * n)


def is_strictly_feasible(problem: EpochProblem, q) -> bool:
    """True constraints hold strictly at ``q`` (the surrogate expanded at ``q`` is exact there)."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    values, _, _ = subproblem_constraints(problem, Expansion.at(problem, q), q.ravel())
    return bool(np.all(values < 0))


def barrier_settings(settings: TrajectoryConfig) -> BarrierSettings:
    return BarrierSettings(factor=settings.barrier_factor, kkt_tolerance=settings.kkt_tolerance)


def solve_convex_subproblem(
    problem: EpochProblem, exp: Expansion, settings: TrajectoryConfig, start: Optional[np.ndarray] = None
) -> ScaIterate:
    """Maximize the surrogate around ``exp``; restores feasibility first if needed."""
    n = problem.uav_count
    barrier = barrier_settings(settings)

    def objective(x: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        return surrogate_objective(problem, exp, x)

    def constraints(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return subproblem_constraints(problem, exp, x)

    x0 = (exp.q_hat if start is None else np.asarray(start, dtype=float)).ravel()
    x0 = find_strictly_feasible(constraints, x0, barrier)
    if not math.isfinite(objective(x0)[0]):
        raise InfeasibleSubproblemError("Start point lies outside the objective domain")
    result = maximize_concave(objective, constraints, x0, barrier)
    q = result.x.reshape(n, 2)
    return ScaIterate(
        positions=q,
        rates=exp.bounds(problem, q),
        phi=exp.phis(problem, q),
        objective=result.value,
        kkt_residual=result.kkt_residual,
        converged=result.converged,
    )


def plan_segment_step(q_cur, q_final, travel: float, step: float, reach: float) -> np.ndarray:
    """Straight move toward ``q_final``: ``travel`` meters, more if reachability needs it, never beyond ``step``."""
    q_cur = np.asarray(q_cur, dtype=float)
    gap = np.asarray(q_final, dtype=float) - q_cur
    dist = float(np.linalg.norm(gap))
    if dist <= 1e-12:
        return q_cur.copy()
    length = min(dist, step, max(travel, dist - reach))
    return q_cur + gap / dist * length


def plan_segments(problem: EpochProblem, speed: float) -> np.ndarray:
    """Segment moves for every UAV in row order, shortening or sidestepping to keep separation."""
    planned: list[np.ndarray] = []
    travel = speed * problem.tau0
    for j in range(problem.uav_count):
        candidates = [
            plan_segment_step(problem.q_cur[j], problem.q_final[j], travel * f, problem.step, problem.reach)
            for f in (1.0, 0.75, 0.5, 0.25)
        ]
        angles = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
        candidates += [problem.q_cur[j] + problem.step * np.array([math.cos(a), math.sin(a)]) for a in angles]
        candidates.append(problem.q_cur[j].copy())

        chosen = None
        for cand in candidates:
            inside = all(0.0 <= cand[a] <= problem.area[a] for a in range(2))
            reachable = np.linalg.norm(cand - problem.q_final[j]) <= problem.reach + 1e-9
            separated = all(np.linalg.norm(cand - other) >= problem.d_safe for other in planned)
            if inside and reachable and separated:
                chosen = cand
                break
        if chosen is None:
            logger.warning(f"Segment planner found no safe move for UAV row {j} in epoch {problem.epoch}")
            chosen = candidates[0]
        planned.append(chosen)
    return np.array(planned).reshape(-1, 2)


def _initial_point(problem: EpochProblem) -> np.ndarray:
    warm = plan_segments(problem, problem.cruise_speed)
    cur_ok = is_strictly_feasible(problem, problem.q_cur)
    warm_ok = is_strictly_feasible(problem, warm)
    if warm_ok and (not cur_ok or approximate_objective(problem, warm) >= approximate_objective(problem, problem.q_cur)):
        return warm
    return problem.q_cur.copy()


def sca_loop(problem: EpochProblem, settings: TrajectoryConfig) -> ScaResult:
    """Successive convex approximation until the objective change drops below the tolerance."""
    q_hat = _initial_point(problem)
    value = approximate_objective(problem, q_hat)
    history = [value] if math.isfinite(value) else []
    last: Optional[ScaIterate] = None
    converged = False
    iterations = 0

    for iterations in range(1, settings.sca_max_iterations + 1):
        exp = Expansion.at(problem, q_hat)
        try:
            iterate = solve_convex_subproblem(problem, exp, settings)
        except InfeasibleSubproblemError:
            if last is None:
                raise
            logger.warning(f"SCA subproblem became infeasible in epoch {problem.epoch}; keeping last iterate")
            break
        new_value = approximate_objective(problem, iterate.positions)
        if history and new_value < value - SCA_MONOTONE_SLACK:
            logger.debug(f"SCA step decreased the objective in epoch {problem.epoch}; stopping at previous iterate")
            converged = True
            break
        change = abs(new_value - value) if history else math.inf
        q_hat, value, last = iterate.positions, new_value, iterate
        history.append(value)
        if change < settings.sca_tolerance:
            converged = True
            break

    capped = not converged and iterations >= settings.sca_max_iterations
    if capped:
        logger.warning(f"SCA hit the iteration cap in epoch {problem.epoch}")
    return ScaResult(
        positions=np.asarray(q_hat, dtype=float).reshape(-1, 2),
        objective=value,
        history=history,
        iterations=iterations,
        converged=converged,
        capped=capped,
        kkt_residual=last.kkt_residual if last is not None else 0.0,
        last_iterate=last,
    )


def build_epoch_subproblem(
    world: WorldState,
    tasks: Iterable[Task],
    epoch: int,
    config: ScenarioConfig,
    md_positions: Optional[np.ndarray] = None,
) -> EpochProblem:
    """Problem data for repositioning every UAV at the end of ``epoch``.

    ``tasks`` are the trades committed to UAVs during the epoch; ``md_positions`` are the
    device positions to plan for (defaults to their current positions).
    """
    grid = world.grid
    limits = kinematic_limits(config)
    params = power_params(config.uavs)
    uavs = world.uavs
    rows = {s.id: j for j, s in enumerate(uavs)}
    q_cur = world.uav_positions()
    md_pos = world.md_positions() if md_positions is None else np.asarray(md_positions, dtype=float)
    channel = config.channel
    beta = channel.exponent_aerial
    altitude = config.uavs.altitude

    links: list[LinkTerm] = []
    for task in tasks:
        if task.server_id is None or task.trade is None or task.server_id not in rows:
            continue
        server = world.server(task.server_id)
        if server.kind != ServerKind.AERIAL:
            continue
        md = world.mds[task.md_id]
        j = rows[task.server_id]
        wait = (task.start_slot - task.generation_slot) * grid.slot_duration_s if task.start_slot is not None else 0.0
        slack = 1.0 + task.deadline_s - wait - task.total_cycles / task.trade.f_alloc
        if slack <= 0:
            continue
        target = md_pos[task.md_id]
        if config.trajectory.los_mode == "fixed":
            p_los = config.trajectory.fixed_los_probability
        else:
            dist = math.sqrt(float(np.sum((q_cur[j] - target) ** 2)) + altitude**2)
            p_los = aerial_los_probability(altitude, dist, channel)
        a2 = md.transmit_power_w * mean_gain_constant(p_los, channel) / channel.noise_w
        ctx = edge_context(md, server, task, config.bargaining.qoe_energy_normalizer)
        link = LinkTerm(
            task_id=task.id,
            uav=j,
            md_position=(float(target[0]), float(target[1])),
            size_bits=task.size_bits,
            slack=slack,
            theta0=md.weight / math.log(1.0 + task.deadline_s),
            theta2=(1.0 - md.weight) * md.transmit_power_w / ctx.md_energy_norm,
            a2=a2,
            bandwidth=channel.bandwidth_aerial_hz,
        )
        rate_now = float(mean_rate(float(np.sum((q_cur[j] - target) ** 2)), link.bandwidth, a2, altitude, beta))
        if rate_now * slack <= task.size_bits:
            continue
        links.append(link)

    return EpochProblem(
        epoch=epoch,
        uav_ids=[s.id for s in uavs],
        q_cur=q_cur,
        q_final=np.array(world.uav_finals, dtype=float).reshape(-1, 2),
        area=world.area,
        step=limits.step_length(grid),
        reach=limits.reach_radius(epoch + 1, grid),
        d_safe=limits.d_safe,
        tau0=grid.epoch_duration_s,
        altitude=altitude,
        beta=beta,
        power=params,
        theta3=np.array([(1.0 - s.weight) / s.energy_budget_j for s in uavs]),
        cruise_speed=min_power_speed(params, limits.v_max),
        links=links,
    )


def plan_epoch(
    world: WorldState,
    tasks: Iterable[Task],
    epoch: int,
    config: ScenarioConfig,
    md_positions: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, Optional[ScaResult]]:
    """Next UAV positions for the end of ``epoch``; falls back to segment moves if SCA cannot start."""
    problem = build_epoch_subproblem(world, tasks, epoch, config, md_positions)
    if problem.uav_count == 0:
        return problem.q_cur, None
    try:
        result = sca_loop(problem, config.trajectory)
    except InfeasibleSubproblemError as e:
        logger.warning(f"Epoch {epoch}: trajectory subproblem infeasible ({e}); using segment moves")
        return plan_segments(problem, problem.cruise_speed), None
    logger.debug(
        f"Epoch {epoch}: SCA {result.iterations} iterations, objective {result.objective:.6g}, "
        f"{len(problem.links)} aerial links"
    )
    return result.positions, result
