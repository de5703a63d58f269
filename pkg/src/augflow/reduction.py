"""Instance transformations feeding the electrical solvers, and their inverses.

Pipeline: directed instance -> undirected gadget instance -> preconditioned
instance -> zero initial state. Flows travel back through
``strip_preconditioning`` and ``undirected_flow_back``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import PrimalDualState
from .errors import ContractViolation
from .exact import round_flow
from .graph import Graph, check_flow_feasible, flow_value

ROLE_MIDDLE = 0
ROLE_SOURCE = 1
ROLE_SINK = 2
ROLE_PRECONDITIONING = 3


@dataclass(frozen=True, eq=False)
class ReductionMapping:
    """How the arcs of ``derived`` relate to the arcs of ``original``.

    ``source_arc[e]`` is the original arc behind derived arc ``e`` (``-1`` for
    preconditioning arcs) and ``role[e]`` one of the ``ROLE_*`` codes.
    """

    original: Graph
    derived: Graph
    source_arc: np.ndarray
    role: np.ndarray
    original_target: int | None = None
    derived_target: int | None = None
    shift: float = 0.0

    @property
    def original_m(self) -> int:
        return self.original.m

    @property
    def derived_m(self) -> int:
        return self.derived.m

    @property
    def added(self) -> int:
        return int(np.count_nonzero(self.role == ROLE_PRECONDITIONING))


def directed_to_undirected(g: Graph, F: int) -> tuple[Graph, int, ReductionMapping]:
    """Undirected instance whose target ``2F + total capacity`` is routable iff ``F`` is routable in ``g``.

    Each arc ``(u, v)`` of capacity ``c`` becomes undirected edges ``{u, v}``,
    ``{s, v}`` and ``{u, t}`` of capacity ``c`` (self-loops dropped). The
    middle edges keep the original arc ids; the side edges follow.
    """
    if not g.is_directed:
        raise ContractViolation("reduction expects a directed instance (no backward capacity)")
    if F < 0 or int(F) != F:
        raise ContractViolation("target must be a non-negative integer")
    s, t, m = g.s, g.t, g.m
    tails, heads, caps = [g.tail], [g.head], [g.cap_plus]
    src, role = [np.arange(m)], [np.full(m, ROLE_MIDDLE)]
    keep_s = np.flatnonzero(g.head != s)
    tails.append(np.full(keep_s.size, s))
    heads.append(g.head[keep_s])
    caps.append(g.cap_plus[keep_s])
    src.append(keep_s)
    role.append(np.full(keep_s.size, ROLE_SOURCE))
    keep_t = np.flatnonzero(g.tail != t)
    tails.append(g.tail[keep_t])
    heads.append(np.full(keep_t.size, t))
    caps.append(g.cap_plus[keep_t])
    src.append(keep_t)
    role.append(np.full(keep_t.size, ROLE_SINK))
    c = np.concatenate(caps)
    derived = Graph(g.n, np.concatenate(tails), np.concatenate(heads), c, c, s, t)
    F_red = 2 * int(F) + int(round(float(g.cap_plus.sum())))
    mapping = ReductionMapping(g, derived, np.concatenate(src), np.concatenate(role).astype(np.int8),
                               int(F), F_red)
    return derived, F_red, mapping


def undirected_flow_back(mapping: ReductionMapping, f_red) -> np.ndarray:
    """Value-F flow on the directed instance from a flow of value at least F' on the gadget instance.

    Shifting a middle edge's flow by its capacity gives a non-negative arc
    flow on the original graph; its s-t path part carries at least ``2F``.
    Exactly ``2F`` of s-t paths are extracted and halved, then rounded when
    the input is integral.
    """
    g, gd = mapping.original, mapping.derived
    F, F_red = mapping.original_target, mapping.derived_target
    f_red = np.asarray(f_red, dtype=float)
    scale = max(1.0, float(F_red))
    if f_red.shape != (gd.m,) or not check_flow_feasible(gd, f_red):
        raise ContractViolation("flow is not feasible on the derived instance")
    if flow_value(gd, f_red) < F_red - 1e-9 * scale:
        raise ContractViolation("derived flow value is below the derived target")
    integral = bool(np.all(f_red == np.round(f_red)))
    eps = 0.0 if integral else 1e-9 * scale
    if F == 0:
        return np.zeros(g.m)

    h = np.clip(f_red[:g.m] + g.cap_plus, 0.0, 2 * g.cap_plus).tolist()
    tails, heads = g.tail.tolist(), g.head.tolist()
    out: list[list[int]] = [[] for _ in range(g.n)]
    for e in range(g.m):
        if h[e] > eps:
            out[tails[e]].append(e)
    ptr = [0] * g.n
    paths = [0.0] * g.m
    need = 2.0 * F
    s, t = g.s, g.t
    while need > eps:
        path: list[int] = []
        verts = [s]
        pos = {s: 0}
        v = s
        while True:
            if v == t:
                amount = min(min(h[e] for e in path), need)
                for e in path:
                    h[e] -= amount
                    paths[e] += amount
                need -= amount
                break
            edges = out[v]
            k = ptr[v]
            while k < len(edges) and h[edges[k]] <= eps:
                k += 1
            ptr[v] = k
            if k == len(edges):
                if v == s:
                    raise ContractViolation("derived flow does not carry 2F units of s-t paths")
                # v absorbs flow: drop the walk's mass into it
                amount = min(h[e] for e in path)
                for e in path:
                    h[e] -= amount
                break
            e = edges[k]
            w = heads[e]
            path.append(e)
            if w in pos:
                i = pos[w]
                cycle = path[i:]
                amount = min(h[c] for c in cycle)
                for c in cycle:
                    h[c] -= amount
                del path[i:]
                for x in verts[i + 1:]:
                    del pos[x]
                del verts[i + 1:]
                v = w
                continue
            pos[w] = len(verts)
            verts.append(w)
            v = w
    f = np.array(paths) / 2.0
    if integral:
        f = round_flow(g, f)
    return f


def add_preconditioning(g: Graph) -> tuple[Graph, ReductionMapping]:
    """Append ``m`` undirected s-t arcs of capacity ``2U``; max-flow grows by ``2mU``."""
    if not g.is_undirected:
        raise ContractViolation("preconditioning expects an undirected instance")
    m, cap = g.m, 2.0 * g.U
    tail = np.concatenate([g.tail, np.full(m, g.s)])
    head = np.concatenate([g.head, np.full(m, g.t)])
    c = np.concatenate([g.cap_plus, np.full(m, cap)])
    derived = Graph(g.n, tail, head, c, c, g.s, g.t)
    src = np.concatenate([np.arange(m), np.full(m, -1)])
    role = np.concatenate([np.full(m, ROLE_MIDDLE), np.full(m, ROLE_PRECONDITIONING)]).astype(np.int8)
    return derived, ReductionMapping(g, derived, src, role, shift=m * cap)


def preconditioned_target(mapping: ReductionMapping, F_red: float) -> float:
    return F_red + mapping.shift


def initial_state(g: Graph, F: float) -> PrimalDualState:
    if not g.is_undirected:
        raise ContractViolation("initial state needs equal forward and backward capacities")
    if g.m and (g.cap_plus <= 0).any():
        raise ContractViolation("initial state needs positive capacities")
    return PrimalDualState(g, np.zeros(g.m), np.zeros(g.n), 0.0, float(F))


def strip_preconditioning(mapping: ReductionMapping, f_pre) -> np.ndarray:
    f_pre = np.asarray(f_pre, dtype=float)
    if f_pre.shape != (mapping.derived.m,) or not check_flow_feasible(mapping.derived, f_pre):
        raise ContractViolation("flow is not feasible on the preconditioned instance")
    return f_pre[: mapping.original.m].copy()
