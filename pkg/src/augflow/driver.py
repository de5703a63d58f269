"""End-to-end routing of a directed instance and the binary search for its maximum flow."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basic import IterationTrace, SolveResult, SolverConfig, solve_basic
from .coupling import Certificate
from .errors import ContractViolation, TheoryViolation
from .exact import OracleResult, ResidualNetwork, cut_capacity, dinic_max_flow
from .graph import Graph, check_flow_feasible, flow_value
from .reduction import (
    add_preconditioning,
    directed_to_undirected,
    strip_preconditioning,
    undirected_flow_back,
)

ALGORITHMS = ("basic", "improved", "dinic")


@dataclass
class TargetResult:
    """Outcome of routing one fixed target on the original instance.

    ``certificate`` lives on the preconditioned instance ``g_pre``; a
    ``source_side`` cut is valid on the original graph as well, since the
    pipeline never changes the vertex set.
    """

    status: str
    F: int
    flow: np.ndarray | None
    trace: list[IterationTrace] = field(default_factory=list)
    certificate: Certificate | None = None
    source_side: np.ndarray | None = None
    F_reduced: int | None = None
    F_pre: float | None = None
    g_pre: Graph | None = None
    solve: SolveResult | None = None

    @property
    def routed(self) -> bool:
        return self.status == "routed"


def route_target(g: Graph, F: int, algorithm: str = "basic",
                 cfg: SolverConfig = SolverConfig()) -> TargetResult:
    if algorithm not in ALGORITHMS:
        raise ContractViolation(f"unknown algorithm {algorithm!r}")
    if not (g.integral and g.is_directed):
        raise ContractViolation("driver expects a directed instance with integer capacities")
    keep = g.cap_plus > 0
    if not keep.all():
        # zero-capacity arcs would make the gadget instance singular
        sub = Graph(g.n, g.tail[keep], g.head[keep], g.cap_plus[keep], g.cap_minus[keep], g.s, g.t)
        out = route_target(sub, F, algorithm, cfg)
        if out.flow is not None:
            full = np.zeros(g.m)
            full[keep] = out.flow
            out.flow = full
        return out
    if algorithm == "dinic":
        net = ResidualNetwork(g)
        if net.blocking_flows(limit=F) >= F:
            return TargetResult("routed", F, net.flow())
        return TargetResult("infeasible", F, None, source_side=net.reachable())

    g_red, F_red, red = directed_to_undirected(g, F)
    g_pre, pre = add_preconditioning(g_red)
    F_pre = F_red + pre.shift
    if algorithm == "basic":
        res = solve_basic(g_pre, F_pre, cfg, pre)
    else:
        from .improved import solve_improved

        res = solve_improved(g_pre, F_pre, cfg, pre)
    out = TargetResult(res.status, F, None, res.trace, res.certificate, res.source_side,
                       F_red, F_pre, g_pre, res)
    if res.routed:
        out.flow = undirected_flow_back(red, strip_preconditioning(pre, res.flow))
    return out


@dataclass(frozen=True)
class DriverAnswer(OracleResult):
    probes: list[tuple[int, bool]] = field(default_factory=list)
    trace: list[IterationTrace] = field(default_factory=list)
    results: list[TargetResult] = field(default_factory=list)


def upper_bound(g: Graph) -> int:
    out_s = g.cap_plus[g.tail == g.s].sum() + g.cap_minus[g.head == g.s].sum()
    in_t = g.cap_plus[g.head == g.t].sum() + g.cap_minus[g.tail == g.t].sum()
    return int(min(g.m * g.U, out_s, in_t))


def max_flow_driver(g: Graph, algorithm: str = "basic",
                    cfg: SolverConfig = SolverConfig(), keep_results: bool = False) -> DriverAnswer:
    """Largest routable value, found by binary search with the chosen solver as oracle."""
    if algorithm == "dinic":
        r = dinic_max_flow(g)
        return DriverAnswer(r.value, r.flow, r.source_side)
    lo, hi = 0, upper_bound(g)
    best = np.zeros(g.m)
    probes: list[tuple[int, bool]] = []
    trace: list[IterationTrace] = []
    results = []
    while lo < hi:
        mid = (lo + hi + 1) // 2
        r = route_target(g, mid, algorithm, cfg)
        probes.append((mid, r.routed))
        trace.extend(r.trace)
        if keep_results:
            results.append(r)
        if r.routed:
            lo, best = mid, r.flow
        else:
            hi = mid - 1
    yes = [F for F, ok in probes if ok]
    no = [F for F, ok in probes if not ok]
    if yes and no and max(yes) >= min(no):
        raise TheoryViolation("feasibility answers are not monotone in the target")
    if not (check_flow_feasible(g, best, 0.0) and flow_value(g, best) == lo):
        raise TheoryViolation("final flow does not match the reported value")
    side = ResidualNetwork(g, best).reachable()
    if cut_capacity(g, side) != lo:
        raise TheoryViolation("final flow is not maximum: residual path remains")
    return DriverAnswer(lo, best, side, probes, trace, results)
