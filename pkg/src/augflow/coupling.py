"""Primal-dual state and the coupling calculus between flows and dual embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import math

import numpy as np

from .errors import ContractViolation, SingularResistance
from .graph import Graph, ResidualView, check_flow_feasible, flow_demands, residual_capacities


@dataclass(frozen=True)
class SolverConstants:
    well_coupled_bound: float = 1 / 100
    fixing_input_bound: float = 1 / 50
    step_denominator: float = 33.0
    infty_safety_denominator: float = 4.0
    c_energy: float = 200.0
    coupling_slack: float = 1e-7


@dataclass(eq=False)
class PrimalDualState:
    """A flow routing ``alpha * F`` units from s to t, paired with vertex duals ``y``."""

    graph: Graph
    flow: np.ndarray
    y: np.ndarray
    alpha: float
    F: float

    @cached_property
    def residual(self) -> ResidualView:
        return residual_capacities(self.graph, self.flow)

    @cached_property
    def arc_potentials(self) -> np.ndarray:
        return arc_potentials(self.residual)

    @cached_property
    def resistances(self) -> np.ndarray:
        res = self.residual
        return 1.0 / res.plus**2 + 1.0 / res.minus**2

    @cached_property
    def violation(self) -> "ViolationVector":
        mismatch = stretches(self.graph, self.y) - self.arc_potentials
        gamma = np.abs(mismatch) * self.residual.sym
        return ViolationVector(gamma, math.sqrt(float(np.dot(gamma, gamma))), mismatch)

    def demand_error(self) -> float:
        sigma = flow_demands(self.graph, self.flow)
        sigma[self.graph.s] += self.alpha * self.F
        sigma[self.graph.t] -= self.alpha * self.F
        return float(np.abs(sigma).max(initial=0.0))

    def is_valid(self, tol: float = 1e-7) -> bool:
        return (check_flow_feasible(self.graph, self.flow)
                and self.demand_error() <= tol * max(self.F, 1.0))


@dataclass(frozen=True)
class ViolationVector:
    values: np.ndarray
    norm2: float
    mismatch: np.ndarray | None = field(default=None, repr=False)


def stretch(g: Graph, y, e: int) -> float:
    return float(y[g.head[e]] - y[g.tail[e]])


def stretches(g: Graph, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return y[g.head] - y[g.tail]


def phi(resid: ResidualView, e: int) -> float:
    up, um = resid.plus[e], resid.minus[e]
    if up <= 0 or um <= 0:
        raise SingularResistance(e)
    return float(1.0 / up - 1.0 / um)


def arc_potentials(resid: ResidualView) -> np.ndarray:
    if (resid.plus <= 0).any() or (resid.minus <= 0).any():
        bad = np.flatnonzero((resid.plus <= 0) | (resid.minus <= 0))
        raise SingularResistance(int(bad[0]))
    return 1.0 / resid.plus - 1.0 / resid.minus


def violation_vector(state: PrimalDualState) -> ViolationVector:
    """Per-arc coupling violation; cached on the state, which is never mutated."""
    return state.violation


def is_well_coupled(gamma: ViolationVector, c: SolverConstants = SolverConstants(),
                    slack: float = 0.0) -> bool:
    return gamma.norm2 <= c.well_coupled_bound + slack


@dataclass(frozen=True)
class Certificate:
    """Dual witness that the s-t demand of value ``F`` cannot be routed.

    ``flow`` is the primal half of the well-coupled pair the bound relies on;
    it travels with the certificate so the coupling can be rechecked.
    """

    alpha: float
    m: int
    F: float
    y: np.ndarray
    lhs: float
    rhs: float
    flow: np.ndarray | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "m": self.m, "F": self.F, "lhs": self.lhs,
                "rhs": self.rhs, "y": [float(v) for v in self.y]}


def _certificate_sides(g: Graph, y, alpha: float, F: float) -> tuple[float, float]:
    return float(F * (y[g.t] - y[g.s])), 2.0 * g.m / (1.0 - alpha)


def infeasibility_check(state: PrimalDualState,
                        c: SolverConstants = SolverConstants()) -> Certificate | None:
    gamma = state.violation
    if not is_well_coupled(gamma, c, c.coupling_slack):
        raise ContractViolation(f"state is not well-coupled (|gamma|_2 = {gamma.norm2:.3g})")
    lhs, rhs = _certificate_sides(state.graph, state.y, state.alpha, state.F)
    if lhs > rhs:
        return Certificate(state.alpha, state.graph.m, state.F, state.y.copy(), lhs, rhs,
                           state.flow.copy())
    return None


def verify_certificate(g: Graph, cert: Certificate,
                       c: SolverConstants = SolverConstants()) -> bool:
    """Recheck the inequality from scratch, and the coupling when the flow is attached."""
    if cert.m != g.m or len(cert.y) != g.n:
        return False
    lhs, rhs = _certificate_sides(g, cert.y, cert.alpha, cert.F)
    if not lhs > rhs:
        return False
    if cert.flow is not None:
        state = PrimalDualState(g, cert.flow, np.asarray(cert.y), cert.alpha, cert.F)
        if not state.is_valid():
            return False
        if not is_well_coupled(violation_vector(state), c, c.coupling_slack):
            return False
    return True


def phi_second_order_decomposition(u1: float, u2: float, x: float) -> tuple[float, float]:
    """Split the change of ``1/(u1-x) - 1/(u2+x)`` into its linear term and a quadratic remainder.

    Returns the slope at zero and ``zeta`` such that the change equals
    ``slope*x + zeta*x**2`` (``zeta`` is zero at ``x == 0``). The remainder is
    evaluated in a cancellation-free closed form.
    """
    if u1 <= 0 or u2 <= 0:
        raise ContractViolation("residual capacities must be positive")
    if abs(x) > min(u1, u2) / 4:
        raise ContractViolation("step exceeds a quarter of the smaller residual")
    slope = 1.0 / u1**2 + 1.0 / u2**2
    if x == 0:
        return slope, 0.0
    zeta = 1.0 / (u1 * u1 * (u1 - x)) - 1.0 / (u2 * u2 * (u2 + x))
    return slope, zeta
