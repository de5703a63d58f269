"""Maximum flow by electrical-flow interior point steps, with exact integral finishing."""

from .basic import SolveResult, SolverConfig, solve_basic
from .coupling import Certificate, PrimalDualState, SolverConstants, verify_certificate
from .dimacs import emit_dimacs, parse_dimacs
from .driver import max_flow_driver, route_target
from .electrical import solve_electrical_flow
from .errors import (
    ArcBudgetExceeded,
    ContractViolation,
    DimacsParseError,
    FlowError,
    IterationLimit,
    SingularResistance,
    TheoryViolation,
    UnroutableDemand,
)
from .exact import dinic_max_flow
from .generators import generate_instance
from .graph import Graph
from .improved import solve_improved

__all__ = [
    "ArcBudgetExceeded", "Certificate", "ContractViolation", "DimacsParseError", "FlowError",
    "Graph", "IterationLimit", "PrimalDualState", "SingularResistance", "SolveResult",
    "SolverConfig", "SolverConstants", "TheoryViolation", "UnroutableDemand", "dinic_max_flow",
    "emit_dimacs", "generate_instance", "max_flow_driver", "parse_dimacs", "route_target",
    "solve_basic", "solve_electrical_flow", "solve_improved", "verify_certificate",
]
