from .satisfaction import (
    PiecewiseLinear,
    build_pwl,
    chance_bound,
    expected_satisfaction,
)
from .conic import ConicModel, SocBlock, SolveResult, solve_socp
from .misocp import (
    BuildInfeasible,
    HCProblem,
    VarMap,
    build_long_term,
    build_misocp,
    encode_sos2,
)
from .bnb import (
    BnbStats,
    HCInfeasible,
    HCSolution,
    branch_and_bound,
    long_term_hc,
    solve_hc,
)
from .verify import VerificationReport, verify_solution

__all__ = [
    "PiecewiseLinear", "build_pwl", "chance_bound", "expected_satisfaction",
    "ConicModel", "SocBlock", "SolveResult", "solve_socp", "BuildInfeasible",
    "HCProblem", "VarMap", "build_long_term", "build_misocp", "encode_sos2",
    "BnbStats", "HCInfeasible", "HCSolution", "branch_and_bound",
    "long_term_hc", "solve_hc", "VerificationReport", "verify_solution",
]
