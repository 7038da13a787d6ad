from hpmg.solver.brd import BrdOutcome, ProfileMemory, Response, epsilon_of_profile, run_brd
from hpmg.solver.hierarchical import (
    BISECTION,
    GRID,
    EquilibriumResult,
    HierarchicalSolver,
    LevelDiagnostics,
    SolverError,
    SolverParams,
    best_response,
    brd_level,
    level_epsilon,
    solve_hg_pspne,
)
from hpmg.solver.search import TIE_TOL, grid_argmin, is_unimodal, mi_argmin, ternary_argmin
from hpmg.solver.verify import VerificationReport, verify_equilibrium

__all__ = [
    "BISECTION",
    "GRID",
    "TIE_TOL",
    "BrdOutcome",
    "EquilibriumResult",
    "HierarchicalSolver",
    "LevelDiagnostics",
    "ProfileMemory",
    "Response",
    "SolverError",
    "SolverParams",
    "VerificationReport",
    "best_response",
    "brd_level",
    "epsilon_of_profile",
    "grid_argmin",
    "is_unimodal",
    "level_epsilon",
    "mi_argmin",
    "run_brd",
    "solve_hg_pspne",
    "ternary_argmin",
    "verify_equilibrium",
]
