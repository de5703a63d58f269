"""Improved solver: early termination, l3-gated progress steps, and boosting of congested arcs.

A boost replaces an arc by a series path whose extra segments have a huge
capacity in one direction and a tuned one in the other. The path routes the
same s-t flow, but its effective resistance is at least double that of the
arc, so boosting raises the electrical energy, which bounds how often the
step rule can stall.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .basic import (
    IterationTrace,
    SolveResult,
    SolverConfig,
    StepOutcome,
    _advance,
    certificate_record,
    check_energy_guard,
    continue_basic,
    check_throughput,
    default_max_iters,
    electrical_step_data,
    energy_guard_armed,
    finish_integral,
    solve_basic,
    trivial_result,
)
from .coupling import Certificate, PrimalDualState, SolverConstants, infeasibility_check
from .electrical import ElectricalFlowResult
from .errors import (
    ArcBudgetExceeded,
    ContractViolation,
    IterationLimit,
    SingularResistance,
    TheoryViolation,
)
from .graph import Graph
from .kernel import BOOST, CERT, DONE, LIMIT, ImprovedRule, run_progress, use_kernel
from .reduction import ROLE_PRECONDITIONING, ReductionMapping, initial_state

KIND_ORIGINAL = 0
KIND_PRECONDITIONING = 1
KIND_TAIL = 2


def compute_eta(m: int, U: float, c_eta: float = 1.0) -> float:
    """Exponent saved over the basic solver; zero means no saving at this size."""
    if m < 2 or U < 1:
        raise ContractViolation("need m >= 2 and U >= 1")
    lm = math.log(m)
    slack = c_eta * math.log(math.log(m * U) + 1.0) / lm
    return max(0.0, 1.0 / 14.0 - math.log(U) / (7.0 * lm) - slack)


@dataclass(frozen=True)
class ImprovedParams:
    """Thresholds of the improved solver, all fixed by the arc count at solve start."""

    eta: float
    m: int
    U: float
    c_rho: float = 66.0**3 * 200.0
    step_denominator: float = 33.0

    def __post_init__(self):
        if self.eta < 0 or self.m < 1:
            raise ContractViolation("eta must be non-negative and m positive")

    @property
    def kstar(self) -> int:
        return max(1, math.ceil(self.m ** (4 * self.eta) - 1e-9))

    @property
    def budget(self) -> int:
        return math.ceil(self.m / 10)

    @property
    def threshold(self) -> float:
        """Remaining value at which the solver stops and hands over to augmenting paths."""
        return self.m ** (0.5 - self.eta)

    def rho_star(self, alpha: float) -> float:
        return self.m ** (0.5 - 3 * self.eta) / (self.c_rho * (1.0 - alpha))

    def gate(self, alpha: float) -> float:
        return self.threshold / (self.step_denominator * (1.0 - alpha))


@dataclass(frozen=True)
class BoostRecord:
    arc: int
    path: tuple[int, ...]
    beta: int
    u_tilde: float
    res_plus: float
    res_minus: float
    phi: float
    mirrored: bool


@dataclass(frozen=True, eq=False)
class BoostMapping:
    """Boosts applied so far on top of ``base``; ``kind`` classifies every current arc."""

    base: Graph
    records: tuple[BoostRecord, ...]
    kind: np.ndarray
    budget: int
    U: float

    @property
    def added(self) -> int:
        return sum(r.beta - 1 for r in self.records)

    @property
    def eligible(self) -> np.ndarray:
        return self.kind == KIND_ORIGINAL


def boost_mapping(g: Graph, budget: int, U: float,
                  pre: ReductionMapping | None = None) -> BoostMapping:
    kind = np.full(g.m, KIND_ORIGINAL, dtype=np.int8)
    if pre is not None:
        kind[pre.role == ROLE_PRECONDITIONING] = KIND_PRECONDITIONING
    return BoostMapping(g, (), kind, budget, U)


def boost_beta(u_hat: float, U: float) -> int:
    return 2 + math.ceil(2.0 * U / u_hat)


def boost_arc(g: Graph, state: PrimalDualState, e: int,
              mapping: BoostMapping) -> tuple[Graph, PrimalDualState, BoostMapping]:
    """Replace arc ``e`` by a path of ``beta`` arcs; the arc keeps its id as the first segment."""
    if state.graph is not g or mapping.kind.size != g.m:
        raise ContractViolation("state and mapping must belong to the graph")
    if mapping.kind[e] != KIND_ORIGINAL:
        raise ContractViolation(f"arc {e} may not be boosted")
    fe = float(state.flow[e])
    up, um = float(g.cap_plus[e] - fe), float(g.cap_minus[e] + fe)
    if up <= 0 or um <= 0:
        raise SingularResistance(e)
    phi_e = 1.0 / up - 1.0 / um
    if phi_e == 0:
        raise ContractViolation(f"boost of arc {e} is undefined: zero arc potential")
    U = mapping.U
    beta = boost_beta(min(up, um), U)
    if mapping.added + beta - 1 > mapping.budget:
        raise ArcBudgetExceeded(f"boosting arc {e} would exceed the budget of {mapping.budget} arcs")
    mirrored = phi_e < 0
    size = abs(phi_e)
    u_tilde = (beta - 2) / size + (fe if mirrored else -fe)
    if not u_tilde >= U:
        raise TheoryViolation(f"boost capacity {u_tilde:.6g} below U = {U:.6g}")

    n, m, k = g.n, g.m, beta - 1
    u, v = int(g.tail[e]), int(g.head[e])
    verts = np.concatenate([[u], np.arange(n, n + k), [v]])
    tail = np.concatenate([g.tail, verts[1:-1]])
    head = g.head.copy()
    head[e] = verts[1]
    head = np.concatenate([head, verts[2:]])
    seg_plus = np.full(k, math.inf if not mirrored else u_tilde)
    seg_minus = np.full(k, u_tilde if not mirrored else math.inf)
    seg_plus[0], seg_minus[0] = g.cap_plus[e], g.cap_minus[e]
    g2 = Graph(n + k, tail, head, np.concatenate([g.cap_plus, seg_plus]),
               np.concatenate([g.cap_minus, seg_minus]), g.s, g.t)

    yv = float(state.y[v])
    inner = yv + phi_e - phi_e * np.arange(k - 1) / (beta - 2)
    y2 = np.concatenate([state.y, [yv], inner[:k - 1]])
    f2 = np.concatenate([state.flow, np.full(k, fe)])
    new = PrimalDualState(g2, f2, y2, state.alpha, state.F)

    c = SolverConstants()
    before = state.violation.norm2
    after = new.violation.norm2
    if after > max(before, c.well_coupled_bound) * (1 + 1e-9) + c.coupling_slack:
        raise TheoryViolation(f"boost broke the coupling ({before:.3g} -> {after:.3g})")
    rec = BoostRecord(e, (e,) + tuple(range(m, m + k)), int(beta), float(u_tilde), up, um, phi_e,
                      mirrored)
    kind = np.concatenate([mapping.kind, [KIND_ORIGINAL], np.full(k - 1, KIND_TAIL)]).astype(np.int8)
    return g2, new, BoostMapping(mapping.base, mapping.records + (rec,), kind, mapping.budget, U)


def unboost_flow(mapping: BoostMapping, f, scale: float = 1.0) -> np.ndarray:
    """Collapse every boost path back to its arc; path flows must agree.

    Agreement is checked to ``1e-9`` relative to ``scale`` (the routed value)
    or the largest arc flow, whichever is bigger.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != mapping.kind.shape:
        raise ContractViolation("flow does not match the boosted graph")
    tol = 1e-9 * max(1.0, scale, float(np.abs(f).max(initial=0.0)))
    for rec in mapping.records:
        vals = f[list(rec.path)]
        if np.abs(vals - vals[0]).max() > tol:
            raise ContractViolation(f"flow along the boost path of arc {rec.arc} is not uniform")
    return f[: mapping.base.m].copy()


def select_boost_set(efr: ElectricalFlowResult, params: ImprovedParams, alpha: float,
                     eligible: np.ndarray | None = None) -> np.ndarray:
    """At most ``kstar`` high-energy arcs of largest congestion, ties to the lower id."""
    if efr.congestion is None:
        raise ContractViolation("electrical flow must carry congestion")
    a = np.abs(efr.congestion)
    mask = a >= params.rho_star(alpha)
    if eligible is not None:
        mask &= eligible
    ids = np.flatnonzero(mask)
    order = np.lexsort((ids, -a[ids]))
    return ids[order[: params.kstar]]


def _step_size(norm: float, efr: ElectricalFlowResult, alpha: float, c) -> float:
    return min(1.0 / (c.step_denominator * norm),
               1.0 / (c.infty_safety_denominator * efr.norms.norminf), 1.0 - alpha)


def improved_step(state: PrimalDualState, params: ImprovedParams, mapping: BoostMapping, *,
                  cfg: SolverConfig = SolverConfig(), iteration: int = 0,
                  guard: bool = False) -> StepOutcome:
    """One improved iteration. The outcome's ``mapping`` is updated when arcs were boosted.

    When no selected arc fits the arc budget the step falls back to an l4-gated
    progress step, so the solver keeps the basic guarantees.
    """
    c = cfg.constants
    if (1.0 - state.alpha) * state.F <= params.threshold:
        rec = IterationTrace(iteration, "terminate", state.alpha, state.alpha, m=state.graph.m)
        return StepOutcome("terminated", state, rec, mapping=mapping)
    cert = infeasibility_check(state, c)
    if cert is not None:
        return StepOutcome("certificate", state, certificate_record(state, cert, iteration), cert,
                           mapping=mapping)
    efr = electrical_step_data(state, cfg)
    if guard:
        check_energy_guard(state, efr, c)
        if cfg.check_throughput:
            check_throughput(state)
    n = efr.norms
    if n.norm3 <= params.gate(state.alpha):
        out = _advance(state, efr, _step_size(n.norm3, efr, state.alpha, c), iteration, c, cfg)
        out.trace.extra["rule"] = "l3"
        out.mapping = mapping
        return out
    chosen = select_boost_set(efr, params, state.alpha, mapping.eligible)
    if chosen.size == 0:
        raise TheoryViolation("no high-energy arc while the l3 gate fails")

    g, cur, mp = state.graph, state, mapping
    done, skipped = [], []
    for e in chosen.tolist():
        up, um = state.residual.plus[e], state.residual.minus[e]
        if up == um:
            warnings.warn(f"skipping boost of arc {e}: zero arc potential", RuntimeWarning)
            skipped.append(e)
            continue
        if mp.added + boost_beta(min(up, um), mp.U) - 1 > mp.budget:
            skipped.append(e)
            continue
        g, cur, mp = boost_arc(g, cur, e, mp)
        done.append(e)
    if not done:
        out = _advance(state, efr, _step_size(n.norm4, efr, state.alpha, c), iteration, c, cfg)
        out.trace.extra.update(rule="l4", skipped=skipped)
        out.mapping = mapping
        return out

    rho = efr.congestion
    gain = float(np.sum(rho[done] ** 2) / n.norm2**2)
    after = electrical_step_data(cur, cfg).energy
    need = (1.0 + gain / 8.0) * efr.energy
    if after < need * (1 - 1e-6):
        raise TheoryViolation(f"boost raised the energy to {after:.6g}, below {need:.6g}")
    rec = IterationTrace(iteration, "boost", state.alpha, state.alpha, None, efr.energy, n.norm2,
                         n.norm3, n.norm4, n.norminf, cur.violation.norm2, g.m,
                         {"arcs": done, "skipped": skipped,
                          "betas": [r.beta for r in mp.records[-len(done):]],
                          "u_tilde": [r.u_tilde for r in mp.records[-len(done):]],
                          "gain": gain, "energy_after": after, "added": mp.added,
                          "budget": mp.budget, "U": mp.U})
    return StepOutcome("boosted", cur, rec, mapping=mp)


def improved_params(g_pre: Graph, cfg: SolverConfig,
                    pre: ReductionMapping | None = None) -> ImprovedParams:
    """Thresholds for ``g_pre``; ``U`` ignores the preconditioning arcs when they are known."""
    if pre is not None and (pre.role != ROLE_PRECONDITIONING).any():
        keep = pre.role != ROLE_PRECONDITIONING
        U = float(max(g_pre.cap_plus[keep].max(), g_pre.cap_minus[keep].max()))
    else:
        U = g_pre.U
    U = max(U, 1.0)
    eta = cfg.eta if cfg.eta is not None else compute_eta(max(g_pre.m, 2), U, cfg.c_eta)
    return ImprovedParams(eta, g_pre.m, U, cfg.c_rho, cfg.constants.step_denominator)


def solve_improved(g_pre: Graph, F_pre: float, cfg: SolverConfig = SolverConfig(),
                   mapping: ReductionMapping | None = None) -> SolveResult:
    """Like :func:`solve_basic`, falling back to it outright when ``eta`` is zero."""
    if F_pre < 0 or int(F_pre) != F_pre:
        raise ContractViolation("target must be a non-negative integer")
    early = trivial_result(g_pre, F_pre)
    if early is not None:
        return early
    params = improved_params(g_pre, cfg, mapping)
    if params.eta == 0:
        return solve_basic(g_pre, F_pre, cfg, mapping)
    c = cfg.constants
    guard = energy_guard_armed(mapping, F_pre)
    max_iters = cfg.max_iters or default_max_iters(g_pre.m, g_pre.U)
    boosts = boost_mapping(g_pre, params.budget, params.U, mapping)
    state = initial_state(g_pre, F_pre)
    trace: list[IterationTrace] = []
    fast = use_kernel(g_pre, cfg)
    it = 0
    while True:
        if it >= max_iters and (1.0 - state.alpha) * F_pre > params.threshold:
            raise IterationLimit(f"no answer after {max_iters} iterations")
        if fast and use_kernel(state.graph, cfg):
            rule = ImprovedRule(params.threshold / params.step_denominator, params.threshold,
                                params.rho_star(0.0), params.kstar,
                                boosts.budget - boosts.added, params.U, boosts.eligible)
            run = run_progress(state, cfg, guard=guard, first_iter=it, limit=max_iters - it,
                               rule=rule)
            trace.extend(run.records)
            state, it = run.state, it + len(run.records)
            if run.status == DONE:
                break
            if run.status == LIMIT:
                raise IterationLimit(f"no answer after {max_iters} iterations")
            if run.status == CERT:
                cert = infeasibility_check(state, c)
                if cert is None:
                    raise TheoryViolation("compiled and reference certificate checks disagree")
                trace.append(certificate_record(state, cert, it))
                return SolveResult("infeasible", F_pre, None, trace,
                                   certificate=project_certificate(cert, g_pre))
        out = improved_step(state, params, boosts, cfg=cfg, iteration=it, guard=guard)
        if out.kind == "terminated":
            break
        trace.append(out.trace)
        if out.kind == "certificate":
            return SolveResult("infeasible", F_pre, None, trace,
                               certificate=project_certificate(out.certificate, g_pre))
        state, boosts = out.state, out.mapping
        it += 1
    trace.append(IterationTrace(it, "terminate", state.alpha, state.alpha, m=state.graph.m,
                                extra={"added": boosts.added, "budget": boosts.budget,
                                       "boosts": len(boosts.records)}))
    flow = unboost_flow(boosts, state.flow, F_pre)
    done = finish_integral(g_pre, flow, int(F_pre), trace)
    if done.routed:
        return done
    # the shortcut stalled: keep stepping until the dual side proves it
    out = continue_basic(state, cfg, guard=guard, trace=trace, it=it + 1,
                         max_iters=it + 1 + max_iters)
    if isinstance(out, SolveResult):
        return SolveResult("infeasible", F_pre, None, trace,
                           certificate=project_certificate(out.certificate, g_pre),
                           source_side=done.source_side, augmentations=done.augmentations)
    return done


def project_certificate(cert: Certificate, g_pre: Graph) -> Certificate:
    """Restate a certificate found on the boosted graph for the graph boosting started from.

    Boosting only appends vertices and arcs, so the s-t dual gap is unchanged
    and the bound with the smaller arc count holds a fortiori. The coupled flow
    belongs to the boosted graph and is not carried over.
    """
    if cert.m == g_pre.m:
        return cert
    lhs, rhs = float(cert.F * (cert.y[g_pre.t] - cert.y[g_pre.s])), 2.0 * g_pre.m / (1 - cert.alpha)
    return Certificate(cert.alpha, g_pre.m, cert.F, cert.y[: g_pre.n].copy(), lhs, rhs)
