import numpy as np
import pytest

from augflow import ContractViolation, Graph, PrimalDualState, SolverConstants, verify_certificate
from augflow.coupling import (
    ViolationVector,
    infeasibility_check,
    is_well_coupled,
    phi,
    phi_second_order_decomposition,
    stretch,
    stretches,
)
from augflow.graph import ResidualView


def view(up, um):
    return ResidualView(np.array([up], dtype=float), np.array([um], dtype=float))


def test_stretch_examples():
    g = Graph.from_arcs(2, [(0, 1, 1, 1)], 0, 1)
    assert stretch(g, [0.0, 2 / 3], 0) == pytest.approx(2 / 3)
    assert stretch(g, [5.0, 5.0], 0) == 0.0
    rev = Graph.from_arcs(2, [(1, 0, 1, 1)], 0, 1)
    y = np.array([0.3, 1.1])
    assert stretches(rev, y)[0] == -stretches(g, y)[0]


def test_phi_examples():
    assert phi(view(1, 3), 0) == pytest.approx(2 / 3)
    assert phi(view(2, 2), 0) == 0.0
    assert phi(view(3, 1), 0) == pytest.approx(-2 / 3)


def state_on_arc(f, y):
    g = Graph.from_arcs(2, [(0, 1, 2, 2)], 0, 1)
    return PrimalDualState(g, np.array([f]), np.array(y, dtype=float), 0.5, 2 * f)


def test_violation_examples():
    assert state_on_arc(1.0, [0.0, 2 / 3]).violation.values[0] == pytest.approx(0.0, abs=1e-15)
    assert state_on_arc(1.0, [0.0, 0.7]).violation.values[0] == pytest.approx(0.7 - 2 / 3)
    g = Graph.from_arcs(3, [(0, 1, 2, 2), (1, 2, 5, 5)], 0, 2)
    fresh = PrimalDualState(g, np.zeros(2), np.zeros(3), 0.0, 1.0)
    assert not fresh.violation.values.any()


def test_well_coupled_examples():
    c = SolverConstants()
    assert is_well_coupled(ViolationVector(np.array([0.005, 0.005]), np.hypot(0.005, 0.005)), c)
    assert not is_well_coupled(ViolationVector(np.array([0.02]), 0.02), c)
    assert is_well_coupled(ViolationVector(np.zeros(3), 0.0), c)


def test_certificate_threshold_arithmetic():
    from augflow import Certificate

    g = Graph.from_arcs(2, [(0, 1, 4, 4), (0, 1, 4, 4)], 0, 1)
    # m=2, alpha=0: F (y_t - y_s) = 5 against 2m/(1-alpha) = 4
    assert verify_certificate(g, Certificate(0.0, 2, 10.0, np.array([0.0, 0.5]), 5.0, 4.0))
    assert not verify_certificate(g, Certificate(0.0, 2, 10.0, np.zeros(2), 0.0, 4.0))


def test_certificate_from_coupled_state():
    g = Graph.from_arcs(2, [(0, 1, 4, 4), (0, 1, 4, 4)], 0, 1)
    f = -1 + np.sqrt(17)  # arc potential 1/(4-f) - 1/(4+f) equals 1
    F = 12.0
    state = PrimalDualState(g, np.array([f, f]), np.array([0.0, 1.0]), 2 * f / F, F)
    assert state.violation.norm2 < 1e-12 and state.is_valid()
    cert = infeasibility_check(state)
    assert cert is not None and cert.lhs == pytest.approx(12.0)
    assert cert.rhs == pytest.approx(4 / (1 - 2 * f / F))
    assert verify_certificate(g, cert)
    assert infeasibility_check(PrimalDualState(g, np.zeros(2), np.zeros(2), 0.0, F)) is None


def test_check_refuses_uncoupled_state():
    with pytest.raises(ContractViolation):
        infeasibility_check(state_on_arc(1.0, [0.0, 5.0]))


def test_taylor_example():
    slope, zeta = phi_second_order_decomposition(4.0, 4.0, 1.0)
    assert slope == pytest.approx(1 / 8)
    assert slope + zeta == pytest.approx(2 / 15)
    assert zeta == pytest.approx(1 / 120)
    assert phi_second_order_decomposition(4.0, 4.0, 0.0)[1] == 0.0


def test_taylor_matches_direct_difference(rng):
    for _ in range(2000):
        u1, u2 = rng.uniform(0.5, 10, 2)
        x = rng.uniform(-1, 1) * min(u1, u2) / 4
        slope, zeta = phi_second_order_decomposition(u1, u2, x)
        change = (1 / (u1 - x) - 1 / (u2 + x)) - (1 / u1 - 1 / u2)
        assert slope * x + zeta * x * x == pytest.approx(change, rel=1e-9, abs=1e-13)


def test_taylor_rejects_large_steps():
    with pytest.raises(ContractViolation):
        phi_second_order_decomposition(4.0, 4.0, 1.5)
