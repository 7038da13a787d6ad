"""Hierarchical policy-making games: costs, closed-form infections, equilibria."""

from hpmg.costs import (
    evaluate_costs,
    impact_cost,
    implementation_cost,
    noncompliance_cost,
    overall_cost,
    social_cost,
)
from hpmg.infection import (
    EpidemicParams,
    TransportMatrix,
    active_infected_fraction,
    expected_new_infections,
    make_transport_matrix,
    poisson_power_moment,
)
from hpmg.solver import (
    EquilibriumResult,
    SolverParams,
    best_response,
    solve_hg_pspne,
    verify_equilibrium,
)
from hpmg.tree import (
    ActionProfile,
    ComplianceMode,
    HierarchyError,
    PartialProfile,
    PlayerId,
    PlayerNode,
    PlayerTree,
    WeightVector,
    build_hierarchy,
)

__version__ = "0.1.0"

__all__ = [
    "ActionProfile",
    "ComplianceMode",
    "EpidemicParams",
    "EquilibriumResult",
    "HierarchyError",
    "PartialProfile",
    "PlayerId",
    "PlayerNode",
    "PlayerTree",
    "SolverParams",
    "TransportMatrix",
    "WeightVector",
    "active_infected_fraction",
    "best_response",
    "build_hierarchy",
    "evaluate_costs",
    "expected_new_infections",
    "impact_cost",
    "implementation_cost",
    "make_transport_matrix",
    "noncompliance_cost",
    "overall_cost",
    "poisson_power_moment",
    "social_cost",
    "solve_hg_pspne",
    "verify_equilibrium",
]
