"""
Convex Solver Module.

Small dense log-barrier interior-point method for maximizing a smooth concave function subject
to smooth convex inequality constraints ``g(x) <= 0``. Oracles return values, gradients and
Hessians; centering uses damped Newton steps with Armijo backtracking, and a phase-one problem
finds a strictly feasible start when the supplied one is not.

Key Features:
- Newton centering with eigenvalue clipping
- Barrier parameter continuation by a constant factor
- Phase-one feasibility restoration
- Lagrangian stationarity residual reported with every solution
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]]
Constraints = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]]


class InfeasibleSubproblemError(ValueError):
    """No strictly feasible point exists (or none was found)."""


@dataclass(frozen=True)
class BarrierSettings:
    t0: float = 1.0
    factor: float = 10.0
    gap_tolerance: float = 1e-10
    kkt_tolerance: float = 1e-6
    newton_tolerance: float = 1e-12
    max_newton: int = 80
    max_outer: int = 40
    armijo: float = 0.25
    backtrack: float = 0.5


@dataclass
class BarrierResult:
    x: np.ndarray
    value: float
    kkt_residual: float
    outer_iterations: int
    newton_iterations: int
    converged: bool


def _barrier(objective: Objective, constraints: Constraints, t: float, x: np.ndarray, derivatives: bool = True):
    f, gf, hf = objective(x)
    g, jg, hg = constraints(x)
    if not np.isfinite(f) or np.any(g >= 0):
        return np.inf, None, None
    inv = -1.0 / g
    value = -t * f - float(np.sum(np.log(-g)))
    if not derivatives:
        return value, None, None
    grad = -t * gf + jg.T @ inv
    hess = -t * hf + np.einsum("i,ijk->jk", inv, hg) + (jg.T * inv**2) @ jg
    return value, grad, hess


def _newton_direction(grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    eigval, eigvec = np.linalg.eigh(0.5 * (hess + hess.T))
    floor = 1e-12 * max(1.0, float(np.max(np.abs(eigval))))
    eigval = np.maximum(eigval, floor)
    return -eigvec @ ((eigvec.T @ grad) / eigval)


def _center(
    objective: Objective,
    constraints: Constraints,
    t: float,
    x: np.ndarray,
    settings: BarrierSettings,
    stop_when: Optional[Callable[[np.ndarray], bool]] = None,
) -> tuple[np.ndarray, int, bool]:
    steps = 0
    for steps in range(1, settings.max_newton + 1):
        value, grad, hess = _barrier(objective, constraints, t, x)
        dx = _newton_direction(grad, hess)
        decrement = float(-grad @ dx)
        if decrement / 2.0 <= settings.newton_tolerance:
            break
        s = 1.0
        while True:
            x_new = x + s * dx
            new_value, _, _ = _barrier(objective, constraints, t, x_new, derivatives=False)
            if new_value <= value + settings.armijo * s * float(grad @ dx):
                break
            s *= settings.backtrack
            if s < 1e-14:
                return x, steps, False
        x = x_new
        if stop_when is not None and stop_when(x):
            return x, steps, True
    return x, steps, False


def maximize_concave(
    objective: Objective,
    constraints: Constraints,
    x0: np.ndarray,
    settings: BarrierSettings = BarrierSettings(),
    stop_when: Optional[Callable[[np.ndarray], bool]] = None,
) -> BarrierResult:
    """Barrier method from a strictly feasible ``x0``."""
    x = np.asarray(x0, dtype=float).copy()
    g0, _, _ = constraints(x)
    if np.any(g0 >= 0):
        raise InfeasibleSubproblemError("Barrier method needs a strictly feasible start")
    m = max(1, g0.size)
    t = settings.t0
    newton_total = 0
    outer = 0
    for outer in range(1, settings.max_outer + 1):
        x, steps, stopped = _center(objective, constraints, t, x, settings, stop_when)
        newton_total += steps
        if stopped or m / t < settings.gap_tolerance:
            break
        t *= settings.factor

    f, gf, _ = objective(x)
    g, jg, _ = constraints(x)
    multipliers = -1.0 / (t * g)
    stationarity = float(np.max(np.abs(gf - jg.T @ multipliers))) if gf.size else 0.0
    residual = max(stationarity, m / t)
    return BarrierResult(
        x=x,
        value=float(f),
        kkt_residual=residual,
        outer_iterations=outer,
        newton_iterations=newton_total,
        converged=residual <= settings.kkt_tolerance,
    )


def find_strictly_feasible(
    constraints: Constraints, x0: np.ndarray, settings: BarrierSettings = BarrierSettings()
) -> np.ndarray:
    """Return ``x0`` if strictly feasible, else a phase-one point with every ``g < 0``."""
    x0 = np.asarray(x0, dtype=float)
    g0, _, _ = constraints(x0)
    if np.all(g0 < 0):
        return x0.copy()

    n = x0.size

    def phase_objective(z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        grad = np.zeros(n + 1)
        grad[-1] = -1.0
        return -float(z[-1]), grad, np.zeros((n + 1, n + 1))

    def phase_constraints(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        g, jg, hg = constraints(z[:-1])
        jac = np.hstack([jg, -np.ones((g.size, 1))])
        hess = np.zeros((g.size, n + 1, n + 1))
        hess[:, :n, :n] = hg
        return g - z[-1], jac, hess

    z0 = np.append(x0, float(np.max(g0)) + 1.0)
    result = maximize_concave(phase_objective, phase_constraints, z0, settings, stop_when=lambda z: z[-1] < 0)
    if result.x[-1] >= 0:
        raise InfeasibleSubproblemError(f"Phase one ended with max constraint value {result.x[-1]:.3e}")
    logger.debug(f"Phase one found a strictly feasible point after {result.newton_iterations} Newton steps")
    return result.x[:-1]
