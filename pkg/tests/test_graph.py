import numpy as np
import pytest

from augflow import ContractViolation, Graph
from augflow.graph import (
    check_flow_feasible,
    flow_demands,
    flow_value,
    residual_capacities,
    st_demand,
    symmetrized_residual,
)


def test_single_arc_demand_convention():
    g = Graph.from_arcs(2, [(0, 1, 3)], 0, 1)
    sigma = flow_demands(g, [1.0])
    assert sigma.tolist() == [-1.0, 1.0]
    assert flow_value(g, [1.0]) == 1.0


def test_residuals_two_sided():
    g = Graph.from_arcs(2, [(0, 1, 2, 5)], 0, 1)
    res = residual_capacities(g, [1.5])
    assert res.plus[0] == 0.5 and res.minus[0] == 6.5
    assert res.sym[0] == 0.5


@pytest.mark.parametrize("bad", [
    dict(n=1, arcs=[], s=0, t=0),
    dict(n=3, arcs=[(0, 0, 1)], s=0, t=2),
    dict(n=3, arcs=[(0, 5, 1)], s=0, t=2),
    dict(n=3, arcs=[(0, 1, -1)], s=0, t=2),
    dict(n=3, arcs=[], s=1, t=1),
])
def test_rejects_malformed(bad):
    with pytest.raises(ContractViolation):
        Graph.from_arcs(bad["n"], bad["arcs"], bad["s"], bad["t"])


def test_zero_capacity_arcs_dropped():
    with pytest.warns(UserWarning):
        g = Graph.from_arcs(3, [(0, 1, 0), (1, 2, 4)], 0, 2)
    assert g.m == 1


def test_capacity_summary_ignores_inf():
    g = Graph(3, [0, 1], [1, 2], [2.0, np.inf], [0.0, 7.0], 0, 2)
    assert g.U == 7.0 and not g.integral


def test_arrays_are_read_only():
    g = Graph.from_arcs(2, [(0, 1, 3)], 0, 1)
    with pytest.raises(ValueError):
        g.cap_plus[0] = 1.0


def test_feasibility_and_symmetrization():
    g = Graph.from_arcs(3, [(0, 1, 2), (1, 2, 2)], 0, 2, undirected=True)
    assert check_flow_feasible(g, [2.0, -2.0])
    assert not check_flow_feasible(g, [2.1, 0.0])
    sym = symmetrized_residual(g, [1.0, 0.5])
    assert sym.cap_plus.tolist() == [1.0, 1.5]
    assert sym.is_undirected


def test_st_demand_and_components():
    g = Graph.from_arcs(4, [(0, 1, 1), (2, 3, 1)], 0, 3)
    assert st_demand(g, 2.0).tolist() == [-2.0, 0, 0, 2.0]
    ncomp, labels = g.components
    assert ncomp == 2 and labels[0] != labels[3]


def test_flow_shape_checked():
    g = Graph.from_arcs(2, [(0, 1, 3)], 0, 1)
    with pytest.raises(ContractViolation):
        flow_demands(g, [1.0, 2.0])


@pytest.mark.parametrize("f, expect", [(1.0, (1, 3, 1)), (0.0, (2, 2, 2)), (2.0, (0, 4, 0))])
def test_residual_examples(f, expect):
    g = Graph.from_arcs(2, [(0, 1, 2, 2)], 0, 1)
    res = residual_capacities(g, [f])
    assert (res.plus[0], res.minus[0], res.sym[0]) == expect


def test_feasibility_examples():
    directed = Graph.from_arcs(2, [(0, 1, 1)], 0, 1)
    assert check_flow_feasible(directed, [0.5])
    assert not check_flow_feasible(directed, [-0.1], slack=0.0)
    assert check_flow_feasible(Graph.from_arcs(2, [(0, 1, 1, 1)], 0, 1), [-1.0])


def test_circulation_has_zero_demand():
    g = Graph.from_arcs(3, [(1, 2, 1), (2, 1, 1)], 0, 2)
    assert not flow_demands(g, [1.0, 1.0]).any()
    assert not flow_demands(g, [0.0, 0.0]).any()


def test_add_flows_examples():
    from augflow.graph import add_flows

    assert add_flows([1.0, 0.0], [0.0, 1.0]).tolist() == [1.0, 1.0]
    f = np.array([0.5, -2.0])
    assert not add_flows(f, -f).any()


def test_residual_composition_stays_feasible(rng):
    from augflow.graph import add_flows

    for _ in range(200):
        caps = rng.integers(1, 4, (5, 2)).astype(float)
        g = Graph(4, rng.integers(0, 2, 5), rng.integers(2, 4, 5), caps[:, 0], caps[:, 1], 0, 3)
        f = rng.uniform(-g.cap_minus, g.cap_plus)
        res = residual_capacities(g, f)
        f2 = rng.uniform(-res.minus, res.plus)
        assert check_flow_feasible(g, add_flows(f, f2))


@pytest.mark.parametrize("arc, f, expect", [((2, 2), 1.0, 1.0), ((4, 4), 0.0, 4.0), ((3, 1), 0.0, 1.0)])
def test_symmetrized_examples(arc, f, expect):
    g = Graph.from_arcs(2, [(0, 1, *arc)], 0, 1)
    sym = symmetrized_residual(g, [f])
    assert sym.cap_plus[0] == sym.cap_minus[0] == expect
