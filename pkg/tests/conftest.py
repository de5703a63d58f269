import itertools
import warnings

import numpy as np
import pytest

from augflow import Graph, PrimalDualState, SolverConfig
from augflow.basic import progress_step
from augflow.reduction import initial_state

CRITERIA: list[str] = []


def brute_force_max_flow(g: Graph) -> float:
    """Minimum s-t cut by enumerating every vertex subset; equals the max-flow value."""
    others = [v for v in range(g.n) if v not in (g.s, g.t)]
    best = np.inf
    for bits in itertools.product((False, True), repeat=len(others)):
        side = np.zeros(g.n, dtype=bool)
        side[g.s] = True
        side[others] = bits
        out = side[g.tail] & ~side[g.head]
        back = ~side[g.tail] & side[g.head]
        best = min(best, g.cap_plus[out].sum() + g.cap_minus[back].sum())
    return float(best)


def dense_electrical(g: Graph, r, sigma):
    """Electrical flow through the Laplacian pseudo-inverse; independent of the package solver."""
    B = np.zeros((g.m, g.n))
    B[np.arange(g.m), g.head] = 1.0
    B[np.arange(g.m), g.tail] = -1.0
    L = B.T @ np.diag(1.0 / np.asarray(r)) @ B
    phi = np.linalg.pinv(L) @ sigma
    phi = phi - phi[g.s]
    f = (B @ phi) / r
    return f, phi


def random_small(rng, n_max=8, m_max=14, U_max=3, directed=True) -> Graph:
    n = int(rng.integers(2, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    tail = rng.integers(0, n, m)
    head = (tail + rng.integers(1, n, m)) % n
    cap = rng.integers(1, U_max + 1, m).astype(float)
    return Graph(n, tail, head, cap, np.zeros(m) if directed else cap, 0, n - 1)


def random_connected_undirected(rng, n: int, m: int, U: int = 5) -> Graph:
    """Spanning path plus random extra edges; source 0, sink n-1."""
    perm = np.concatenate([[0], rng.permutation(np.arange(1, n - 1)), [n - 1]])
    tail = list(perm[:-1])
    head = list(perm[1:])
    while len(tail) < m:
        u, v = rng.integers(0, n, 2)
        if u != v:
            tail.append(u)
            head.append(v)
    cap = rng.integers(1, U + 1, len(tail)).astype(float)
    return Graph(n, np.array(tail), np.array(head), cap, cap, 0, n - 1)


def advanced_state(g, F, steps):
    st = initial_state(g, F)
    for it in range(steps):
        st = progress_step(st, cfg=SolverConfig(engine="numpy"), iteration=it).state
    return st


def perturbed(state, target, rng):
    """Same flow, duals moved along a random direction until the violation norm hits ``target``."""
    p = rng.normal(size=state.graph.n)
    lo, hi = 0.0, 1.0
    norm = lambda t: PrimalDualState(state.graph, state.flow, state.y + t * p, state.alpha,
                                     state.F).violation.norm2
    while norm(hi) < target:
        hi *= 2
    for _ in range(80):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if norm(mid) < target else (lo, mid)
    return PrimalDualState(state.graph, state.flow, state.y + hi * p, state.alpha, state.F)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_zero_arcs():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="dropped .* zero-capacity")
        yield


def record_criterion(line: str) -> None:
    CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
