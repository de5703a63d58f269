"""Electrical-flow augmentation with coupling repair, gated by the l4 norm of congestion."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .coupling import (
    Certificate,
    PrimalDualState,
    SolverConstants,
    infeasibility_check,
)
from .electrical import ElectricalFlowResult, electrical_flow_unchecked
from .errors import ContractViolation, IterationLimit, SingularResistance, TheoryViolation
from .exact import augmenting_paths_finish, dinic_max_flow, round_flow
from .graph import Graph, st_demand, symmetrized_residual
from .kernel import CERT, LIMIT, run_progress, use_kernel
from .reduction import ReductionMapping, initial_state


@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    validate: bool = False
    check_throughput: bool = False
    max_iters: int | None = None
    termination: float = 1.0
    constants: SolverConstants = SolverConstants()
    linear_solver: str = "auto"
    eta: float | None = None
    c_eta: float = 1.0
    c_rho: float = 66.0**3 * 200.0
    engine: str = "auto"

    def __post_init__(self):
        if self.engine not in ("auto", "numpy", "numba"):
            raise ContractViolation(f"unknown engine {self.engine!r}")


@dataclass
class IterationTrace:
    iter: int
    event: str
    alpha_before: float
    alpha: float
    delta: float | None = None
    energy: float | None = None
    norm2: float | None = None
    norm3: float | None = None
    norm4: float | None = None
    norminf: float | None = None
    gamma2: float | None = None
    m: int = 0
    extra: dict[str, Any] = field(default_factory=dict)

    METRIC_KEYS = ("iter", "alpha", "delta", "energy", "norm2", "norm3", "norm4",
                   "norminf", "gamma2", "event")

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.METRIC_KEYS}


@dataclass(frozen=True)
class FixingWork:
    theta: np.ndarray
    sigma_hat: np.ndarray
    r_hat: np.ndarray
    varsigma: np.ndarray
    correction_energy: float


@dataclass
class StepOutcome:
    kind: str
    state: PrimalDualState
    trace: IterationTrace | None = None
    certificate: Certificate | None = None
    mapping: Any = None


@dataclass
class SolveResult:
    """``status`` is ``"routed"`` (``flow`` has value ``F``) or ``"infeasible"``.

    An infeasible answer carries either a duality ``certificate`` or a
    residual ``source_side`` cut whose capacity is below the target.
    """

    status: str
    F: float
    flow: np.ndarray | None
    trace: list[IterationTrace]
    certificate: Certificate | None = None
    source_side: np.ndarray | None = None
    augmentations: int = 0

    @property
    def routed(self) -> bool:
        return self.status == "routed"

    @property
    def iterations(self) -> int:
        return sum(1 for rec in self.trace if rec.event != "terminate")


def default_max_iters(m: int, U: float) -> int:
    return 100 * math.ceil(math.sqrt(m) * math.log(m * U + 2))


def augmentation(state: PrimalDualState, efr: ElectricalFlowResult, delta: float):
    """Step ``delta`` along the electrical flow in both the primal and the dual."""
    if efr.norms is None:
        raise ContractViolation("electrical flow must carry congestion norms")
    if delta < 0 or delta * efr.norms.norminf > 0.25 * (1 + 1e-12):
        raise ContractViolation("step size exceeds a quarter of the least residual headroom")
    return state.flow + delta * efr.flow, state.y + delta * efr.potentials


def fixing_step(state: PrimalDualState, c: SolverConstants = SolverConstants(),
                tol: float = 1e-10, method: str = "auto", return_work: bool = False):
    """Restore well-coupling without changing the routed demand.

    A first-order flow correction aligns every arc potential with its
    stretch; the demand it creates is then cancelled by an electrical flow
    whose potentials are added to the duals.
    """
    g = state.graph
    viol = state.violation
    if viol.norm2 > c.fixing_input_bound + c.coupling_slack:
        raise ContractViolation("coupling violation too large for a fixing step")
    theta = viol.mismatch / state.resistances
    shifted = state.flow + theta
    sigma_hat = np.bincount(g.head, theta, g.n) - np.bincount(g.tail, theta, g.n)
    rp, rm = g.cap_plus - shifted, g.cap_minus + shifted
    if (rp <= 0).any() or (rm <= 0).any():
        raise SingularResistance(int(np.flatnonzero((rp <= 0) | (rm <= 0))[0]))
    w_hat = 1.0 / (1.0 / rp**2 + 1.0 / rm**2)
    corr = electrical_flow_unchecked(g, w_hat, -sigma_hat, tol, method=method)
    out = PrimalDualState(g, shifted + corr.flow, state.y + corr.potentials, state.alpha, state.F)
    if return_work:
        return out, FixingWork(theta, sigma_hat, 1.0 / w_hat, viol.values, corr.energy)
    return out


def _advance(state: PrimalDualState, efr: ElectricalFlowResult, delta: float, it: int,
             c: SolverConstants, cfg: SolverConfig, event: str = "progress") -> StepOutcome:
    f_hat, y_hat = augmentation(state, efr, delta)
    mid = PrimalDualState(state.graph, f_hat, y_hat, state.alpha + delta, state.F)
    extra: dict[str, Any] = {}
    if cfg.validate:
        before = state.violation.values
        after = mid.violation.values
        bound = (4.0 / 3.0) * before + 7.0 * (delta * efr.congestion) ** 2
        slack = float(np.max(after - bound, initial=-np.inf))
        extra["augmentation_slack"] = slack
        if slack > 1e-7:
            raise TheoryViolation(f"augmentation coupling bound exceeded by {slack:.3g}")
    new, work = fixing_step(mid, c, cfg.tol, cfg.linear_solver, return_work=True)
    gamma = new.violation
    if gamma.norm2 > c.well_coupled_bound + c.coupling_slack:
        raise TheoryViolation(f"coupling lost after fixing (|gamma|_2 = {gamma.norm2:.3g})")
    if cfg.validate:
        ratio = np.abs(work.theta) / np.maximum(work.varsigma * mid.residual.sym, 1e-300)
        extra["theta_ratio"] = float(np.max(np.where(work.theta == 0, 0.0, ratio), initial=0.0))
        extra["correction_energy"] = work.correction_energy
        extra["fix_input"] = mid.violation.norm2
        if np.any(np.abs(work.theta) > work.varsigma * mid.residual.sym * (1 + 1e-9) + 1e-15):
            raise TheoryViolation("first-order correction exceeds its per-arc bound")
        if extra["fix_input"] <= c.fixing_input_bound and work.correction_energy > 1 / 2000 + 1e-6:
            raise TheoryViolation("fixing correction energy above its bound")
        if not new.is_valid():
            raise TheoryViolation("state stopped being a feasible flow for its demand")
    n = efr.norms
    rec = IterationTrace(it, event, state.alpha, new.alpha, delta, efr.energy, n.norm2, n.norm3,
                         n.norm4, n.norminf, gamma.norm2, state.graph.m, extra)
    return StepOutcome("progressed", new, rec)


def electrical_step_data(state: PrimalDualState, cfg: SolverConfig) -> ElectricalFlowResult:
    """Electrical flow of the full target demand under the coupling resistances."""
    g = state.graph
    state.arc_potentials  # raises on a saturated arc before any division by zero
    return electrical_flow_unchecked(g, 1.0 / state.resistances, st_demand(g, state.F), cfg.tol,
                                     resid=state.residual, method=cfg.linear_solver)


def check_energy_guard(state: PrimalDualState, efr: ElectricalFlowResult,
                       c: SolverConstants) -> None:
    limit = c.c_energy * state.graph.m / (1.0 - state.alpha) ** 2
    if efr.energy > limit * (1 + 1e-6):
        raise TheoryViolation(f"energy {efr.energy:.4g} above {limit:.4g} without a certificate")


def check_throughput(state: PrimalDualState) -> float:
    sym = symmetrized_residual(state.graph, state.flow)
    value = dinic_max_flow(sym, eps=1e-12 * max(sym.U, 1.0)).value
    need = (1.0 - state.alpha) * state.F / 10.0
    if value < need * (1 - 1e-9):
        raise TheoryViolation(f"symmetrized residual routes {value:.4g} < {need:.4g}")
    return value


def certificate_record(state: PrimalDualState, cert: Certificate, it: int) -> IterationTrace:
    return IterationTrace(it, "certificate", state.alpha, state.alpha, m=state.graph.m,
                          extra={"lhs": cert.lhs, "rhs": cert.rhs})


def progress_step(state: PrimalDualState, c: SolverConstants = SolverConstants(), *,
                  cfg: SolverConfig = SolverConfig(), iteration: int = 0,
                  guard: bool = True) -> StepOutcome:
    """One iteration: certificate check, electrical flow, l4-gated augmentation, fixing."""
    if state.alpha >= 1:
        raise ContractViolation("nothing left to route")
    cert = infeasibility_check(state, c)
    if cert is not None:
        return StepOutcome("certificate", state, certificate_record(state, cert, iteration), cert)
    efr = electrical_step_data(state, cfg)
    if guard:
        check_energy_guard(state, efr, c)
        if cfg.check_throughput:
            check_throughput(state)
    n = efr.norms
    delta = min(1.0 / (c.step_denominator * n.norm4),
                1.0 / (c.infty_safety_denominator * n.norminf), 1.0 - state.alpha)
    return _advance(state, efr, delta, iteration, c, cfg)


def finish_integral(g: Graph, flow, F: int, trace: list[IterationTrace]) -> SolveResult:
    """Round the fractional flow and top it up to ``F`` with augmenting paths."""
    x = round_flow(g, flow)
    done = augmenting_paths_finish(g, x, int(F))
    if done.reached:
        return SolveResult("routed", F, done.flow, trace, augmentations=done.augmentations)
    return SolveResult("infeasible", F, None, trace, source_side=done.source_side,
                       augmentations=done.augmentations)


def trivial_result(g: Graph, F: float) -> SolveResult | None:
    """Answers for a zero target or a sink unreachable from the source."""
    if F == 0:
        return SolveResult("routed", 0, np.zeros(g.m), [])
    _, labels = g.components
    if labels[g.s] != labels[g.t]:
        return SolveResult("infeasible", F, None, [], source_side=labels == labels[g.s])
    return None


def energy_guard_armed(mapping: ReductionMapping | None, F_pre: float) -> bool:
    return mapping is not None and mapping.shift > 0 and F_pre <= 1.5 * mapping.shift


def solve_basic(g_pre: Graph, F_pre: float, cfg: SolverConfig = SolverConfig(),
                mapping: ReductionMapping | None = None) -> SolveResult:
    """Route ``F_pre`` units on a preconditioned instance or prove that it is impossible.

    With the preconditioning ``mapping`` supplied, the energy guard is armed
    whenever it is a theorem, i.e. while ``F_pre`` is at most 1.5 times the
    total preconditioning capacity.
    """
    if F_pre < 0 or int(F_pre) != F_pre:
        raise ContractViolation("target must be a non-negative integer")
    early = trivial_result(g_pre, F_pre)
    if early is not None:
        return early
    guard = energy_guard_armed(mapping, F_pre)
    max_iters = cfg.max_iters or default_max_iters(g_pre.m, g_pre.U)
    out = continue_basic(initial_state(g_pre, F_pre), cfg, guard=guard, trace=[], it=0,
                         max_iters=max_iters)
    if isinstance(out, SolveResult):
        return out
    state, trace, it = out
    trace.append(IterationTrace(it, "terminate", state.alpha, state.alpha, m=g_pre.m))
    return finish_integral(g_pre, state.flow, int(F_pre), trace)


def continue_basic(state: PrimalDualState, cfg: SolverConfig, *, guard: bool,
                   trace: list[IterationTrace], it: int, max_iters: int):
    """Basic progress steps from ``state`` until a certificate or the termination threshold.

    Returns an infeasible :class:`SolveResult`, or ``(state, trace, it)`` once
    fewer than ``cfg.termination`` units remain.
    """
    c = cfg.constants
    F = state.F
    if use_kernel(state.graph, cfg):
        run = run_progress(state, cfg, guard=guard, first_iter=it, limit=max_iters - it)
        trace.extend(run.records)
        state, it = run.state, it + len(run.records)
        if run.status == LIMIT:
            raise IterationLimit(f"no answer after {max_iters} iterations")
        if run.status == CERT:
            cert = infeasibility_check(state, c)
            if cert is None:
                raise TheoryViolation("compiled and reference certificate checks disagree")
            trace.append(certificate_record(state, cert, it))
            return SolveResult("infeasible", F, None, trace, certificate=cert)
    while (1.0 - state.alpha) * F >= cfg.termination:
        if it >= max_iters:
            raise IterationLimit(f"no answer after {max_iters} iterations")
        out = progress_step(state, c, cfg=cfg, iteration=it, guard=guard)
        trace.append(out.trace)
        if out.kind == "certificate":
            return SolveResult("infeasible", F, None, trace, certificate=out.certificate)
        state = out.state
        it += 1
    return state, trace, it
