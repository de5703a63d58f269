"""Directed multigraphs with two-sided capacities, plus flow and demand helpers.

Flows and demands are plain float64 arrays: a flow has one entry per arc
(negative values run against the arc orientation), a demand has one entry
per vertex and records net inflow.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import ContractViolation


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable arc-list multigraph.

    Arc ``e`` runs ``tail[e] -> head[e]`` and admits flow in the closed range
    ``[-cap_minus[e], cap_plus[e]]``. Capacities may be ``inf`` (used by
    boosting); ``U`` is the largest finite capacity.
    """

    n: int
    tail: np.ndarray
    head: np.ndarray
    cap_plus: np.ndarray
    cap_minus: np.ndarray
    s: int
    t: int
    U: float = field(init=False)
    integral: bool = field(init=False)

    def __post_init__(self):
        tail = np.asarray(self.tail, dtype=np.intp).copy()
        head = np.asarray(self.head, dtype=np.intp).copy()
        up = np.asarray(self.cap_plus, dtype=np.float64).copy()
        um = np.asarray(self.cap_minus, dtype=np.float64).copy()
        if not (tail.shape == head.shape == up.shape == um.shape) or tail.ndim != 1:
            raise ContractViolation("arc arrays must be one-dimensional and of equal length")
        n, s, t = int(self.n), int(self.s), int(self.t)
        if n < 2:
            raise ContractViolation("a graph needs at least two vertices")
        if not (0 <= s < n and 0 <= t < n) or s == t:
            raise ContractViolation(f"invalid source/sink pair ({s}, {t})")
        if tail.size and (tail.min() < 0 or head.min() < 0 or tail.max() >= n or head.max() >= n):
            raise ContractViolation("arc endpoint out of range")
        loops = np.flatnonzero(tail == head)
        if loops.size:
            raise ContractViolation(f"self-loop on arc {int(loops[0])}")
        if np.isnan(up).any() or np.isnan(um).any() or (up < 0).any() or (um < 0).any():
            raise ContractViolation("capacities must be non-negative numbers")
        finite = np.concatenate([up[np.isfinite(up)], um[np.isfinite(um)]])
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "tail", _frozen(tail))
        object.__setattr__(self, "head", _frozen(head))
        object.__setattr__(self, "cap_plus", _frozen(up))
        object.__setattr__(self, "cap_minus", _frozen(um))
        object.__setattr__(self, "U", float(finite.max()) if finite.size else 0.0)
        caps = np.concatenate([up, um])
        object.__setattr__(self, "integral",
                           bool(np.isfinite(caps).all() and (caps == np.round(caps)).all()))

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple], s: int, t: int,
                  undirected: bool = False) -> "Graph":
        """Build from ``(tail, head, cap)`` or ``(tail, head, cap_plus, cap_minus)`` tuples.

        Arcs with both capacities zero are dropped with a warning. With
        ``undirected=True`` a three-tuple gets the same capacity both ways.
        """
        tails, heads, ups, ums = [], [], [], []
        dropped = 0
        for arc in arcs:
            if len(arc) == 3:
                u, v, c = arc
                cp, cm = c, (c if undirected else 0)
            else:
                u, v, cp, cm = arc
            if cp == 0 and cm == 0:
                dropped += 1
                continue
            tails.append(u)
            heads.append(v)
            ups.append(cp)
            ums.append(cm)
        if dropped:
            warnings.warn(f"dropped {dropped} zero-capacity arc(s)", stacklevel=2)
        return cls(n, np.array(tails, dtype=np.intp), np.array(heads, dtype=np.intp),
                   np.array(ups, dtype=float), np.array(ums, dtype=float), s, t)

    @property
    def m(self) -> int:
        return int(self.tail.size)

    @property
    def is_undirected(self) -> bool:
        return bool(np.array_equal(self.cap_plus, self.cap_minus))

    @property
    def is_directed(self) -> bool:
        return bool((self.cap_minus == 0).all())

    def arcs(self) -> list[tuple[int, int, float, float]]:
        return list(zip(self.tail.tolist(), self.head.tolist(),
                        self.cap_plus.tolist(), self.cap_minus.tolist()))

    @cached_property
    def components(self) -> tuple[int, np.ndarray]:
        """Connected components of the underlying undirected graph."""
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        adj = coo_matrix((np.ones(self.m), (self.tail, self.head)), shape=(self.n, self.n))
        return connected_components(adj, directed=False)

    def with_capacities(self, cap_plus, cap_minus) -> "Graph":
        return Graph(self.n, self.tail, self.head, cap_plus, cap_minus, self.s, self.t)


@dataclass(frozen=True)
class ResidualView:
    plus: np.ndarray
    minus: np.ndarray

    @property
    def sym(self) -> np.ndarray:
        return np.minimum(self.plus, self.minus)


def _check_pair(g: Graph, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != (g.m,):
        raise ContractViolation(f"flow has shape {f.shape}, graph has {g.m} arcs")
    return f


def zero_flow(g: Graph) -> np.ndarray:
    return np.zeros(g.m)


def residual_capacities(g: Graph, f) -> ResidualView:
    f = _check_pair(g, f)
    return ResidualView(g.cap_plus - f, g.cap_minus + f)


def check_flow_feasible(g: Graph, f, slack: float | None = None) -> bool:
    f = _check_pair(g, f)
    if slack is None:
        slack = 1e-9 * max(g.U, 1.0)
    return bool(np.all(f <= g.cap_plus + slack) and np.all(f >= -g.cap_minus - slack))


def flow_demands(g: Graph, f) -> np.ndarray:
    """Net inflow at every vertex."""
    f = _check_pair(g, f)
    return np.bincount(g.head, f, g.n) - np.bincount(g.tail, f, g.n)


def add_flows(f, f2) -> np.ndarray:
    f, f2 = np.asarray(f, dtype=np.float64), np.asarray(f2, dtype=np.float64)
    if f.shape != f2.shape:
        raise ContractViolation("flows belong to different graphs")
    return f + f2


def st_demand(g: Graph, value: float) -> np.ndarray:
    """Demand that routes ``value`` units from s to t."""
    sigma = np.zeros(g.n)
    sigma[g.s] = -value
    sigma[g.t] = value
    return sigma


def flow_value(g: Graph, f) -> float:
    """Net flow into the sink."""
    return float(flow_demands(g, f)[g.t])


def symmetrized_residual(g: Graph, f) -> Graph:
    if not check_flow_feasible(g, f):
        raise ContractViolation("symmetrization needs a feasible flow")
    u = np.maximum(residual_capacities(g, f).sym, 0.0)
    return g.with_capacities(u, u)
