"""DIMACS max-flow text format."""

from __future__ import annotations

import warnings

import numpy as np

from .errors import DimacsParseError
from .graph import Graph


def _int(tok: str, what: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise DimacsParseError(f"{what} must be an integer, got {tok!r}", line) from None


def parse_dimacs(text: str) -> Graph:
    """Directed graph from DIMACS ``max`` text; vertex ids are shifted to 0-based.

    Self-loops are legal in the format but carry no flow, so they are dropped
    with a warning (they still count against the header's arc total).
    """
    n = m_decl = None
    s = t = None
    arcs: list[tuple[int, int, int]] = []
    seen_arcs = 0
    for no, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        kind = tok[0]
        if kind == "p":
            if n is not None:
                raise DimacsParseError("second problem line", no)
            if len(tok) != 4 or tok[1] != "max":
                raise DimacsParseError("problem line must read 'p max <nodes> <arcs>'", no)
            n, m_decl = _int(tok[2], "node count", no), _int(tok[3], "arc count", no)
            if n < 2 or m_decl < 0:
                raise DimacsParseError("need at least two nodes and a non-negative arc count", no)
            continue
        if n is None:
            raise DimacsParseError(f"'{kind}' line before the problem line", no)
        if kind == "n":
            if len(tok) != 3 or tok[2] not in ("s", "t"):
                raise DimacsParseError("node line must read 'n <id> s' or 'n <id> t'", no)
            v = _int(tok[1], "node id", no)
            if not 1 <= v <= n:
                raise DimacsParseError(f"node id {v} out of range 1..{n}", no)
            if tok[2] == "s":
                if s is not None:
                    raise DimacsParseError("duplicate source line", no)
                s = v - 1
            else:
                if t is not None:
                    raise DimacsParseError("duplicate sink line", no)
                t = v - 1
        elif kind == "a":
            if len(tok) != 4:
                raise DimacsParseError("arc line must read 'a <tail> <head> <capacity>'", no)
            u, v, cap = (_int(x, w, no) for x, w in zip(tok[1:], ("tail", "head", "capacity")))
            if not (1 <= u <= n and 1 <= v <= n):
                raise DimacsParseError(f"arc endpoint out of range 1..{n}", no)
            if cap < 0:
                raise DimacsParseError("capacity must be non-negative", no)
            seen_arcs += 1
            if u == v:
                warnings.warn(f"line {no}: dropping self-loop on node {u}", RuntimeWarning)
                continue
            arcs.append((u - 1, v - 1, cap))
        else:
            raise DimacsParseError(f"unknown line type {kind!r}", no)
    if n is None:
        raise DimacsParseError("missing problem line 'p max <nodes> <arcs>'")
    if s is None:
        raise DimacsParseError("missing source line 'n <id> s'")
    if t is None:
        raise DimacsParseError("missing sink line 'n <id> t'")
    if s == t:
        raise DimacsParseError("source and sink are the same node")
    if seen_arcs != m_decl:
        raise DimacsParseError(f"header declares {m_decl} arcs but {seen_arcs} were given")
    a = np.array(arcs, dtype=np.int64).reshape(-1, 3)
    return Graph(n, a[:, 0], a[:, 1], a[:, 2].astype(float), np.zeros(len(a)), s, t)


def emit_dimacs(g: Graph, comment: str | None = None) -> str:
    if not (g.is_directed and g.integral):
        raise DimacsParseError("only directed instances with integer capacities can be written")
    lines = [f"c {comment}"] if comment else []
    lines.append(f"p max {g.n} {g.m}")
    lines.append(f"n {g.s + 1} s")
    lines.append(f"n {g.t + 1} t")
    lines.extend(f"a {u + 1} {v + 1} {int(c)}"
                 for u, v, c in zip(g.tail.tolist(), g.head.tolist(), g.cap_plus.tolist()))
    return "\n".join(lines) + "\n"
