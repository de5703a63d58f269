import numpy as np
import pytest

from augflow import ContractViolation, SolverConfig, dinic_max_flow, generate_instance, route_target
from augflow.kernel import use_kernel


def events(trace):
    return [(t.event, t.extra.get("rule"), tuple(t.extra.get("arcs", ()))) for t in trace]


def pair(g, F, algorithm, **kw):
    runs = [route_target(g, F, algorithm, SolverConfig(engine=e, validate=True, **kw))
            for e in ("numpy", "numba")]
    return runs


@pytest.mark.parametrize("kind, n, m, U, seed", [
    ("random_digraph", 10, 30, 4, 1), ("random_digraph", 20, 60, 7, 2), ("grid", 3, 4, 5, 3),
])
@pytest.mark.parametrize("extra", [0, 1])
def test_engines_agree_basic(kind, n, m, U, seed, extra):
    g = generate_instance(kind, n, m, U, seed)
    F = dinic_max_flow(g).value + extra
    a, b = pair(g, F, "basic")
    assert a.status == b.status and len(a.trace) == len(b.trace)
    assert events(a.trace) == events(b.trace)
    assert np.allclose([t.alpha for t in a.trace], [t.alpha for t in b.trace], rtol=1e-8)
    if a.routed:
        assert np.array_equal(a.flow, b.flow)


@pytest.mark.filterwarnings("ignore:skipping boost")
def test_engines_agree_improved():
    g = generate_instance("adversarial_parallel", 12, 60, 5, 0)
    F = dinic_max_flow(g).value
    a, b = pair(g, F, "improved", eta=0.05)
    assert events(a.trace) == events(b.trace)
    assert any(t.event == "boost" for t in a.trace)
    assert np.allclose([t.alpha for t in a.trace], [t.alpha for t in b.trace], rtol=1e-8)
    assert np.array_equal(a.flow, b.flow)


def test_engine_selection():
    g = generate_instance("grid", 3, 3, 2, 0)
    assert not use_kernel(g, SolverConfig(engine="numpy"))
    assert use_kernel(g, SolverConfig())
    assert not use_kernel(g, SolverConfig(linear_solver="cg"))
    with pytest.raises(ContractViolation):
        SolverConfig(engine="gpu")
