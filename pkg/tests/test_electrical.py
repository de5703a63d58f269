import numpy as np
import pytest
from conftest import dense_electrical, random_connected_undirected

from augflow import ContractViolation, Graph, UnroutableDemand, solve_electrical_flow
from augflow.electrical import (
    congestion,
    coupling_resistances,
    dual_energy_bound,
    energy,
    rho_norms,
)
from augflow.graph import ResidualView, flow_demands, st_demand


def unit(g):
    return st_demand(g, 1.0)


def test_resistance_examples():
    g = Graph.from_arcs(2, [(0, 1, 2, 2)], 0, 1)
    assert coupling_resistances(g, [1.0])[0] == pytest.approx(10 / 9)
    assert coupling_resistances(g, [0.0])[0] == pytest.approx(0.5)
    for c in (1, 4, 10):
        gc = Graph.from_arcs(2, [(0, 1, c, c)], 0, 1)
        assert coupling_resistances(gc, [0.0])[0] == pytest.approx(2 / c**2)


def test_single_edge_ohm():
    g = Graph.from_arcs(2, [(0, 1, 1, 1)], 0, 1)
    res = solve_electrical_flow(g, [2.0], unit(g))
    assert res.flow[0] == pytest.approx(1.0)
    assert res.potentials[1] - res.potentials[0] == pytest.approx(2.0)
    assert res.energy == pytest.approx(2.0)


def test_parallel_and_series():
    par = Graph.from_arcs(2, [(0, 1, 1, 1), (0, 1, 1, 1)], 0, 1)
    res = solve_electrical_flow(par, [1.0, 1.0], unit(par))
    assert res.flow == pytest.approx([0.5, 0.5])
    assert res.energy == pytest.approx(0.5)
    ser = Graph.from_arcs(3, [(0, 1, 1, 1), (1, 2, 1, 1)], 0, 2)
    res = solve_electrical_flow(ser, [1.0, 3.0], unit(ser))
    drops = res.potentials[ser.head] - res.potentials[ser.tail]
    assert drops == pytest.approx([1.0, 3.0])
    assert res.energy == pytest.approx(4.0)


def test_energy_and_congestion_examples():
    assert energy([2.0], [1.0]) == 2.0
    assert energy([2.0, 1.0], [0.0, 0.0]) == 0.0
    assert energy([1.0, 3.0], [1.0, 1.0]) == 4.0
    rho = congestion([2.0, -1.0, 0.0], ResidualView(np.array([1.0, 2.0, 3.0]), np.array([5.0, 2.0, 3.0])))
    assert rho.tolist() == [2.0, -0.5, 0.0]
    n = rho_norms(np.ones(4))
    assert n.norm4 == pytest.approx(np.sqrt(2)) and n.norminf == 1.0


@pytest.mark.parametrize("method", ["dense", "sparse", "cg"])
def test_matches_pseudo_inverse(rng, method):
    for _ in range(10):
        g = random_connected_undirected(rng, 9, 20)
        r = rng.uniform(0.1, 5.0, g.m)
        sigma = rng.normal(size=g.n)
        sigma -= sigma.mean()
        res = solve_electrical_flow(g, r, sigma, tol=1e-12, method=method)
        f, phi = dense_electrical(g, r, sigma)
        assert res.flow == pytest.approx(f, rel=1e-7, abs=1e-9)
        assert res.potentials == pytest.approx(phi, rel=1e-7, abs=1e-9)
        assert flow_demands(g, res.flow) == pytest.approx(sigma, abs=1e-9)
        assert res.energy == pytest.approx(res.dual_energy, rel=1e-9)


def test_disconnected_components():
    g = Graph.from_arcs(4, [(0, 1, 1, 1), (2, 3, 1, 1)], 0, 1)
    res = solve_electrical_flow(g, [1.0, 1.0], np.array([-1.0, 1.0, 2.0, -2.0]))
    assert res.flow == pytest.approx([1.0, -2.0])
    with pytest.raises(UnroutableDemand):
        solve_electrical_flow(g, [1.0, 1.0], np.array([-1.0, 0.0, 1.0, 0.0]))


def test_input_contracts():
    g = Graph.from_arcs(2, [(0, 1, 1, 1)], 0, 1)
    with pytest.raises(ContractViolation):
        solve_electrical_flow(g, [0.0], unit(g))
    with pytest.raises(ContractViolation):
        solve_electrical_flow(g, [1.0], np.array([1.0, 1.0]))
    with pytest.raises(ContractViolation):
        solve_electrical_flow(g, [1.0, 2.0], unit(g))


def test_dual_bound_tight_on_one_edge():
    g = Graph.from_arcs(2, [(0, 1, 1, 1)], 0, 1)
    phi = np.array([0.0, 0.5])
    assert 1.0 / dual_energy_bound(g, [2.0], unit(g), phi) == pytest.approx(2.0)


def test_dual_bound_below_energy(rng):
    par = Graph.from_arcs(2, [(0, 1, 1, 1), (0, 1, 1, 1)], 0, 1)
    for _ in range(50):
        phi = np.array([0.0, 1.0]) + rng.normal(scale=0.3, size=2)
        if abs(phi[1] - phi[0]) < 1e-3:
            continue
        assert 1.0 / dual_energy_bound(par, [1.0, 1.0], unit(par), phi) <= 0.5 + 1e-9
    path = Graph.from_arcs(4, [(0, 1, 1, 1), (1, 2, 1, 1), (2, 3, 1, 1)], 0, 3)
    r = np.array([1.0, 2.0, 0.5])
    true = solve_electrical_flow(path, r, unit(path)).energy
    phi = np.array([0.0, 0.0, 0.0, 1.0])
    assert 1.0 / dual_energy_bound(path, r, unit(path), phi) <= true + 1e-12
    with pytest.raises(ContractViolation):
        dual_energy_bound(path, r, unit(path), np.zeros(4))
