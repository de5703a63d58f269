"""Seeded instance families for tests, demos and the command line."""

from __future__ import annotations

import numpy as np

from .errors import ContractViolation
from .graph import Graph

KINDS = ("random_dag", "random_digraph", "grid", "adversarial_parallel")


def _caps(rng: np.random.Generator, k: int, U: int) -> np.ndarray:
    return rng.integers(1, U + 1, k).astype(float)


def random_dag(n: int, m: int, U: int, seed: int) -> Graph:
    """``m`` arcs ``u -> v`` with ``u < v`` drawn uniformly; source 0, sink ``n-1``."""
    if n < 2 or m < 0 or U < 1:
        raise ContractViolation("random_dag needs n >= 2, m >= 0, U >= 1")
    rng = np.random.default_rng(seed)
    a = rng.integers(0, n, (m, 2))
    lo, hi = a.min(axis=1), a.max(axis=1)
    same = lo == hi
    # redraw collapsed pairs as arcs out of the smaller endpoint
    hi[same] = np.minimum(lo[same] + 1, n - 1)
    lo[same] = hi[same] - 1
    return Graph(n, lo, hi, _caps(rng, m, U), np.zeros(m), 0, n - 1)


def random_digraph(n: int, m: int, U: int, seed: int) -> Graph:
    """``m`` arcs with uniform endpoints (no self-loops, cycles allowed); source 0, sink ``n-1``."""
    if n < 2 or m < 0 or U < 1:
        raise ContractViolation("random_digraph needs n >= 2, m >= 0, U >= 1")
    rng = np.random.default_rng(seed)
    tail = rng.integers(0, n, m)
    head = (tail + rng.integers(1, n, m)) % n
    return Graph(n, tail, head, _caps(rng, m, U), np.zeros(m), 0, n - 1)


def grid(rows: int, cols: int, U: int, seed: int) -> Graph:
    """Lattice with right and down arcs from the top-left corner to the bottom-right one."""
    if rows < 1 or cols < 1 or rows * cols < 2 or U < 1:
        raise ContractViolation("grid needs at least two cells and U >= 1")
    rng = np.random.default_rng(seed)
    ids = np.arange(rows * cols).reshape(rows, cols)
    tail = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    head = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    m = tail.size
    return Graph(rows * cols, tail, head, _caps(rng, m, U), np.zeros(m), 0, rows * cols - 1)


def adversarial_parallel(n: int, m: int, U: int, seed: int) -> Graph:
    """Many wide source routes funnelling into one unit-capacity bottleneck arc.

    Vertices ``1..n-3`` fan out from the source and merge at a hub; the
    hub reaches the sink only through an arc of capacity 1 and a two-arc
    detour of capacity 1. Arcs beyond the skeleton are parallel copies of
    random fan-out and merge arcs.
    """
    k = n - 3
    skel = 2 * k + 3
    if k < 1 or m < skel or U < 1:
        raise ContractViolation(f"adversarial_parallel needs n >= 4 and m >= {skel}")
    rng = np.random.default_rng(seed)
    s, hub, side, t = 0, n - 2, n - 3, n - 1
    mids = np.arange(1, k + 1)
    if k > 1:
        mids = mids[mids != side]
    tail = [np.full(mids.size, s), mids]
    head = [mids, np.full(mids.size, hub)]
    extra = m - 2 * mids.size - 3
    pick = rng.integers(0, mids.size, extra)
    fan = rng.random(extra) < 0.5
    tail.append(np.where(fan, s, mids[pick]))
    head.append(np.where(fan, mids[pick], hub))
    tail.append(np.array([hub, hub, side]))
    head.append(np.array([t, side, t]))
    tail, head = np.concatenate(tail), np.concatenate(head)
    caps = _caps(rng, tail.size, U)
    caps[-3:] = 1.0
    return Graph(n, tail, head, caps, np.zeros(tail.size), s, t)


def generate_instance(kind: str, n: int, m: int, U: int, seed: int) -> Graph:
    """Deterministic instance of ``kind``; for ``grid``, ``n`` and ``m`` are rows and columns."""
    makers = {"random_dag": random_dag, "random_digraph": random_digraph, "grid": grid,
              "adversarial_parallel": adversarial_parallel}
    if kind not in makers:
        raise ContractViolation(f"unknown instance kind {kind!r}; choose from {', '.join(KINDS)}")
    return makers[kind](n, m, U, seed)
