import numpy as np
import pytest
from conftest import brute_force_max_flow, random_small

from augflow import ContractViolation, Graph, dinic_max_flow, max_flow_driver
from augflow.exact import augmenting_paths_finish, cut_capacity, round_flow
from augflow.graph import check_flow_feasible, flow_demands, flow_value


def test_dinic_examples():
    assert dinic_max_flow(Graph.from_arcs(2, [(0, 1, 3)], 0, 1)).value == 3
    diamond = Graph.from_arcs(4, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)], 0, 3)
    r = dinic_max_flow(diamond)
    assert r.value == 2 and cut_capacity(diamond, r.source_side) == 2
    assert r.cut == frozenset({0})


def test_dinic_two_sided_capacities():
    g = Graph.from_arcs(3, [(1, 0, 0, 2), (1, 2, 5, 0)], 0, 2)
    assert dinic_max_flow(g).value == 2


def test_dinic_against_enumeration(rng):
    for _ in range(150):
        g = random_small(rng, directed=bool(rng.integers(2)))
        r = dinic_max_flow(g)
        assert r.value == brute_force_max_flow(g)
        assert check_flow_feasible(g, r.flow, 0.0) and flow_value(g, r.flow) == r.value


def test_round_flow_fixed_point():
    diamond = Graph.from_arcs(4, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 3, 1)], 0, 3)
    f = np.array([1.0, 0.0, 1.0, 0.0])
    assert round_flow(diamond, f).tolist() == f.tolist()


def test_round_flow_parallel_halves():
    g = Graph.from_arcs(2, [(0, 1, 1), (0, 1, 1)], 0, 1)
    out = round_flow(g, [0.5, 0.5])
    assert sorted(out.tolist()) == [0.0, 1.0]


def test_round_flow_random_convex_combinations(rng):
    for _ in range(100):
        g = random_small(rng, n_max=8, m_max=14, U_max=4, directed=bool(rng.integers(2)))
        a = dinic_max_flow(g).flow
        b = rng.uniform(0, 1) * a
        lam = rng.uniform()
        f = lam * a + (1 - lam) * b
        out = round_flow(g, f)
        assert np.all(out == np.round(out)) and check_flow_feasible(g, out, 0.0)
        assert flow_value(g, out) >= np.floor(flow_value(g, f) + 1e-9)
        sigma = flow_demands(g, out)
        sigma[[g.s, g.t]] = 0
        assert not sigma.any()


def test_round_flow_rejects_infeasible():
    g = Graph.from_arcs(2, [(0, 1, 1)], 0, 1)
    with pytest.raises(ContractViolation):
        round_flow(g, [1.5])


def test_augmenting_examples():
    path = Graph.from_arcs(3, [(0, 1, 1), (1, 2, 1)], 0, 2)
    out = augmenting_paths_finish(path, [0.0, 0.0], 1)
    assert out.reached and out.augmentations == 1 and out.flow.tolist() == [1.0, 1.0]
    same = augmenting_paths_finish(path, [1.0, 1.0], 1)
    assert same.reached and same.augmentations == 0


def test_augmenting_reports_cut(rng):
    for _ in range(50):
        g = random_small(rng)
        F = dinic_max_flow(g).value
        out = augmenting_paths_finish(g, np.zeros(g.m), int(F) + 1)
        assert not out.reached and cut_capacity(g, out.source_side) == F < F + 1


def test_driver_empty_and_tiny():
    g = Graph.from_arcs(3, [(1, 2, 4)], 0, 2)
    assert max_flow_driver(g).value == 0
    unit = Graph.from_arcs(3, [(0, 1, 1), (1, 2, 1)], 0, 2)
    ans = max_flow_driver(unit)
    assert ans.value == 1 and ans.flow.tolist() == [1.0, 1.0]


@pytest.mark.parametrize("algorithm", ["basic", "improved", "dinic"])
def test_driver_matches_oracle(rng, algorithm):
    from augflow import SolverConfig

    cfg = SolverConfig(eta=0.05)
    for _ in range(6):
        g = random_small(rng, n_max=8, m_max=14, U_max=3)
        ans = max_flow_driver(g, algorithm, cfg)
        assert ans.value == brute_force_max_flow(g)
        yes = [F for F, ok in ans.probes if ok]
        no = [F for F, ok in ans.probes if not ok]
        assert not (yes and no and max(yes) >= min(no))


def test_driver_keeps_zero_capacity_arcs():
    g = Graph(3, [0, 0, 1], [1, 2, 2], [2.0, 0.0, 1.0], [0.0, 0.0, 0.0], 0, 2)
    ans = max_flow_driver(g)
    assert ans.value == 1 and ans.flow.tolist() == [1.0, 0.0, 1.0]
