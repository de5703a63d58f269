"""Integral finishing: flow rounding, augmenting paths, and a Dinic max-flow oracle."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .graph import Graph, check_flow_feasible, flow_demands

SNAP_TOL = 1e-7
NOISE_TOL = 1e-5


class ResidualNetwork:
    """Residual graph of ``g`` under ``flow``; edge ``2e`` is arc ``e`` forward, ``2e+1`` backward.

    Integral instances use Python ints throughout, so augmentations are exact.
    """

    def __init__(self, g: Graph, flow=None, eps: float = 0.0):
        self.g = g
        self.eps = eps
        self.exact = g.integral and (flow is None or np.all(np.asarray(flow) == np.round(flow)))
        f0 = np.zeros(g.m) if flow is None else np.asarray(flow, dtype=float)
        conv = (lambda a: [int(v) for v in np.round(a)]) if self.exact else (lambda a: a.tolist())
        up, um, f = conv(g.cap_plus), conv(g.cap_minus), conv(f0)
        res = [0] * (2 * g.m)
        res[0::2] = [a - b for a, b in zip(up, f)]
        res[1::2] = [a + b for a, b in zip(um, f)]
        self.res = res
        self.base = f
        self.delta = [0] * g.m
        tails, heads = g.tail.tolist(), g.head.tolist()
        to = [0] * (2 * g.m)
        to[0::2] = heads
        to[1::2] = tails
        self.to = to
        adj: list[list[int]] = [[] for _ in range(g.n)]
        for e, (u, v) in enumerate(zip(tails, heads)):
            adj[u].append(2 * e)
            adj[v].append(2 * e + 1)
        self.adj = adj

    def push(self, edge: int, amount) -> None:
        self.res[edge] -= amount
        self.res[edge ^ 1] += amount
        if edge & 1:
            self.delta[edge >> 1] -= amount
        else:
            self.delta[edge >> 1] += amount

    def flow(self) -> np.ndarray:
        return np.array([a + b for a, b in zip(self.base, self.delta)], dtype=float)

    def reachable(self) -> np.ndarray:
        seen = np.zeros(self.g.n, dtype=bool)
        seen[self.g.s] = True
        queue = deque([self.g.s])
        res, to, eps = self.res, self.to, self.eps
        while queue:
            v = queue.popleft()
            for e in self.adj[v]:
                w = to[e]
                if not seen[w] and res[e] > eps:
                    seen[w] = True
                    queue.append(w)
        return seen

    def shortest_path(self) -> list[int] | None:
        g = self.g
        parent = [-1] * g.n
        parent[g.s] = -2
        queue = deque([g.s])
        res, to, eps = self.res, self.to, self.eps
        while queue:
            v = queue.popleft()
            for e in self.adj[v]:
                w = to[e]
                if parent[w] == -1 and res[e] > eps:
                    parent[w] = e
                    if w == g.t:
                        path = []
                        while w != g.s:
                            e = parent[w]
                            path.append(e)
                            w = to[e ^ 1]
                        return path[::-1]
                    queue.append(w)
        return None

    def _levels(self) -> list[int]:
        level = [-1] * self.g.n
        level[self.g.s] = 0
        queue = deque([self.g.s])
        res, to, eps = self.res, self.to, self.eps
        while queue:
            v = queue.popleft()
            for e in self.adj[v]:
                w = to[e]
                if level[w] < 0 and res[e] > eps:
                    level[w] = level[v] + 1
                    queue.append(w)
        return level

    def blocking_flows(self, limit=math.inf):
        """Dinic phases until no augmenting path remains or ``limit`` units were pushed."""
        s, t = self.g.s, self.g.t
        res, to, adj, eps = self.res, self.to, self.adj, self.eps
        total = 0
        while total < limit:
            level = self._levels()
            if level[t] < 0:
                break
            ptr = [0] * self.g.n
            while total < limit:
                path: list[int] = []
                v = s
                while v != t:
                    edges = adj[v]
                    while ptr[v] < len(edges):
                        e = edges[ptr[v]]
                        if res[e] > eps and level[to[e]] == level[v] + 1:
                            break
                        ptr[v] += 1
                    else:
                        if v == s:
                            path = []
                            break
                        level[v] = -1
                        e = path.pop()
                        v = to[e ^ 1]
                        ptr[v] += 1
                        continue
                    path.append(e)
                    v = to[e]
                if not path:
                    break
                amount = min(min(res[e] for e in path), limit - total)
                for e in path:
                    self.push(e, amount)
                total += amount
        return total


def cut_capacity(g: Graph, source_side) -> float:
    side = np.asarray(source_side, dtype=bool)
    out = side[g.tail] & ~side[g.head]
    back = ~side[g.tail] & side[g.head]
    return float(g.cap_plus[out].sum() + g.cap_minus[back].sum())


@dataclass(frozen=True)
class OracleResult:
    value: float
    flow: np.ndarray
    source_side: np.ndarray

    @property
    def cut(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.source_side).tolist())


def dinic_max_flow(g: Graph, eps: float = 0.0) -> OracleResult:
    """Exact maximum flow with a matching minimum cut (floats allowed with ``eps > 0``)."""
    net = ResidualNetwork(g, eps=eps)
    value = net.blocking_flows()
    side = net.reachable()
    flow = net.flow()
    if net.exact:
        value = int(value)
        if cut_capacity(g, side) != value:
            raise ContractViolation("max-flow and min-cut disagree")
    return OracleResult(value, flow, side)


@dataclass(frozen=True)
class FinishOutcome:
    reached: bool
    flow: np.ndarray
    source_side: np.ndarray | None = None
    augmentations: int = 0


def augmenting_paths_finish(g: Graph, f, target: int) -> FinishOutcome:
    """Shortest augmenting paths from an integral flow until its value reaches ``target``."""
    if not g.integral:
        raise ContractViolation("augmenting-path finishing needs integral capacities")
    f = np.asarray(f, dtype=float)
    if not (np.all(f == np.round(f)) and check_flow_feasible(g, f, 0.0)):
        raise ContractViolation("augmenting-path finishing needs an integral feasible flow")
    value = int(round(flow_demands(g, f)[g.t]))
    net = ResidualNetwork(g, f)
    count = 0
    while value < target:
        path = net.shortest_path()
        if path is None:
            return FinishOutcome(False, net.flow(), net.reachable(), count)
        amount = min(min(net.res[e] for e in path), target - value)
        for e in path:
            net.push(e, amount)
        value += amount
        count += 1
    return FinishOutcome(True, net.flow(), None, count)


def round_flow(g: Graph, f) -> np.ndarray:
    """Integral feasible s-t flow whose value is at least the floor of the input value.

    Fractional mass is cancelled around cycles of the fractional support,
    closed through a virtual sink-to-source arc. Each cancellation moves
    every cycle arc toward an adjacent integer, so capacities stay respected,
    and the virtual arc only ever moves upward.
    """
    if not g.integral:
        raise ContractViolation("rounding needs integral capacities")
    f = np.asarray(f, dtype=float)
    if not check_flow_feasible(g, f, 1e-9 * max(g.U, 1.0)):
        raise ContractViolation("rounding needs a feasible flow")
    sigma = flow_demands(g, f)
    value = float(sigma[g.t])
    sigma[g.t] -= value
    sigma[g.s] += value
    scale = max(1.0, abs(value), float(np.abs(f).max(initial=0.0)))
    if np.abs(sigma).max(initial=0.0) > NOISE_TOL * scale:
        raise ContractViolation("input to rounding is not an s-t flow")

    m = g.m
    x = np.empty(m + 1)
    x[:m] = np.clip(f, -g.cap_minus, g.cap_plus)
    x[m] = value
    tails = g.tail.tolist() + [g.t]
    heads = g.head.tolist() + [g.s]
    # absolute tolerance: the virtual arc carries the whole value, so a relative
    # one would swallow real fractional mass there
    snap = SNAP_TOL * max(1.0, g.U)
    near = np.abs(x - np.round(x)) <= snap
    x[near] = np.round(x[near])
    xs = x.tolist()
    adj: list[set[int]] = [set() for _ in range(g.n)]
    frac = set(np.flatnonzero(~near).tolist())
    for a in frac:
        adj[tails[a]].add(a)
        adj[heads[a]].add(a)

    def settle(a: int, target: float) -> None:
        xs[a] = target
        frac.discard(a)
        adj[tails[a]].discard(a)
        adj[heads[a]].discard(a)

    while frac:
        a = next(iter(frac))
        v = tails[a]
        visited = {v: 0}
        path: list[tuple[int, int]] = []
        cycle = None
        while True:
            d = 1 if tails[a] == v else -1
            w = heads[a] if d == 1 else tails[a]
            path.append((a, d))
            if w in visited:
                cycle = path[visited[w]:]
                break
            visited[w] = len(path)
            nxt = next((b for b in adj[w] if b != a), None)
            if nxt is None:
                # lone fractional arc: only conservation noise can cause this
                r = round(xs[a])
                if abs(xs[a] - r) > NOISE_TOL * max(1.0, abs(xs[a])):
                    raise ContractViolation("fractional support is not a circulation")
                settle(a, float(r))
                break
            v, a = w, nxt
        if cycle is None:
            continue
        up_room = min(math.ceil(xs[b]) - xs[b] if d == 1 else xs[b] - math.floor(xs[b])
                      for b, d in cycle)
        down_room = min(xs[b] - math.floor(xs[b]) if d == 1 else math.ceil(xs[b]) - xs[b]
                        for b, d in cycle)
        on_virtual = [d for b, d in cycle if b == m]
        if on_virtual:
            sign = on_virtual[0]
        else:
            sign = 1 if up_room <= down_room else -1
        eps = up_room if sign == 1 else down_room
        for b, d in cycle:
            target = xs[b] + sign * d * eps
            r = round(target)
            if abs(target - r) <= snap:
                settle(b, float(r))
            else:
                xs[b] = target
        # the arc that defined eps must be integral now even under rounding noise
        tight = min(cycle, key=lambda bd: abs(xs[bd[0]] - round(xs[bd[0]])))[0]
        if tight in frac:
            settle(tight, float(round(xs[tight])))

    out = np.round(np.array(xs[:m]))
    sigma = flow_demands(g, out)
    val = sigma[g.t]
    sigma[g.t] -= val
    sigma[g.s] += val
    if np.any(sigma != 0) or not check_flow_feasible(g, out, 0.0):
        raise ContractViolation("rounding produced an invalid flow")
    if val < math.floor(value + SNAP_TOL * scale):
        raise ContractViolation("rounding lost flow value")
    return out
