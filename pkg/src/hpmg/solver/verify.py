"""Independent re-check of a solved profile by exhaustive grid deviation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hpmg.costs import evaluate_levels
from hpmg.infection import EpidemicParams
from hpmg.solver.hierarchical import EquilibriumResult, HierarchicalSolver, SolverParams
from hpmg.solver.search import mi_argmin
from hpmg.tree import ComplianceMode, PlayerId, PlayerTree


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    tolerance: float
    reported: tuple[float, ...]
    recomputed: tuple[float, ...]
    gains: dict[PlayerId, float] = field(default_factory=dict)
    mi_consistent: bool = True
    mi_violations: tuple[PlayerId, ...] = ()

    def summary(self) -> str:
        lines = [f"verification: {'PASS' if self.passed else 'FAIL'} (tolerance {self.tolerance:g})"]
        for l, (rep, rec) in enumerate(zip(self.reported, self.recomputed), start=1):
            flag = "ok" if rec <= rep + self.tolerance else "UNDER-REPORTED"
            lines.append(f"  level {l}: reported eps {rep:.3e}  recomputed eps {rec:.3e}  {flag}")
        for pid, g in sorted(self.gains.items()):
            lines.append(f"  {pid}: deviation gain {g:.6g}")
        lines.append(f"  minimal-impact tie rule: {'consistent' if self.mi_consistent else 'violated'}")
        for pid in self.mi_violations:
            lines.append(f"    {pid} is indifferent but not at its minimal-impact choice")
        return "\n".join(lines)


def verify_equilibrium(
    result: EquilibriumResult,
    tree: PlayerTree,
    epi: EpidemicParams,
    mode: ComplianceMode | str,
    params: SolverParams | None = None,
    tolerance: float = 1e-9,
) -> VerificationReport:
    """Recompute every level's epsilon by trying every grid action for every player.

    Leaf deviations are valued directly through the vectorised cost model.
    Inner deviations re-solve the levels below with a fresh solver.  Passes
    iff no recomputed epsilon exceeds the reported one by more than
    ``tolerance``.
    """
    mode = ComplianceMode.parse(mode)
    params = params or SolverParams(grid_delta=1.0 / result.n_intervals)
    if params.n_intervals != result.n_intervals:
        raise ValueError("solver params use a different grid than the result")
    n = result.n_intervals
    tol = params.tie_tol
    L = tree.n_levels
    grid = [tuple(lv) for lv in result.grid_profile]
    base = [np.asarray(g, dtype=float) / n for g in grid]
    current = evaluate_levels(tree, epi, mode, base)
    solver = HierarchicalSolver(tree, epi, mode, params)

    recomputed = [0.0] * L
    gains: dict[PlayerId, float] = {}
    mi_bad: list[PlayerId] = []

    def record(pid: PlayerId, cur: float, costs: list[float]) -> None:
        g = cur - min(costs)
        if g > tol:
            gains[pid] = g
            recomputed[pid.level - 1] = max(recomputed[pid.level - 1], g)

    # leaves
    leaf = base[-1]
    for i in range(tree.size(L)):
        costs = []
        for j in range(n + 1):
            trial = leaf.copy()
            trial[i] = j / n
            bd = evaluate_levels(tree, epi, mode, base[:-1] + [trial])
            costs.append(float(bd.overall[L - 1][i]))
        record(PlayerId(L, i), float(current.overall[L - 1][i]), costs)

    # inner levels, lower levels re-solved for every deviation
    for l in range(L - 1, 0, -1):
        for i in range(tree.size(l)):
            costs, socials = [], []
            for j in range(n + 1):
                own = list(grid[l - 1])
                own[i] = j
                own = tuple(own)
                sub = solver.subgame(l + 1, own)
                trial = base[: l - 1] + [np.asarray(own, float) / n] + [np.asarray(a, float) / n for a in sub.actions]
                bd = evaluate_levels(tree, epi, mode, trial)
                costs.append(float(bd.overall[l - 1][i]))
                socials.append(float(bd.social[l - 1][i]))
            pid = PlayerId(l, i)
            cur = float(current.overall[l - 1][i])
            record(pid, cur, costs)
            if cur - min(costs) <= tol and mi_argmin(costs, socials, tol) != grid[l - 1][i]:
                mi_bad.append(pid)

    passed = all(rec <= rep + tolerance for rep, rec in zip(result.epsilons, recomputed))
    return VerificationReport(
        passed=passed,
        tolerance=tolerance,
        reported=tuple(result.epsilons),
        recomputed=tuple(recomputed),
        gains=gains,
        mi_consistent=not mi_bad,
        mi_violations=tuple(mi_bad),
    )
