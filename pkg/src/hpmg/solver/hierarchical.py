"""Backward induction with per-level best-response dynamics.

Given the actions of level ``l-1``, the players of level ``l`` play a
simultaneous-move game whose payoffs come from recursively solving the
levels below.  Subgames depend on the level above only through the parent
level's profile, so they are memoised on ``(level, parent profile)`` and each
one draws from its own random stream derived from that key.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from hpmg.costs import evaluate_levels
from hpmg.infection import EpidemicParams
from hpmg.solver.brd import BrdOutcome, GridProfile, ProfileMemory, Response, run_brd
from hpmg.solver.search import TIE_TOL, grid_argmin, mi_argmin, ternary_argmin
from hpmg.tree import ActionProfile, ComplianceMode, PartialProfile, PlayerId, PlayerTree

GRID = "grid"
BISECTION = "bisection"


class SolverError(RuntimeError):
    pass


def _per_level(value, n_levels: int, name: str) -> tuple:
    if isinstance(value, (list, tuple)):
        if len(value) != n_levels - 1:
            raise ValueError(f"{name}: expected {n_levels - 1} values (levels 2..{n_levels}), got {len(value)}")
        return tuple(value)
    return (value,) * (n_levels - 1)


@dataclass(frozen=True)
class LevelParams:
    max_steps: int
    responders: int
    epsilon_limit: float
    search: str


@dataclass(frozen=True)
class SolverParams:
    """Solver knobs.  Per-level entries are scalars or one value per level 2..L.

    ``responders`` may be ``"all"`` (synchronous dynamics).  ``search`` picks
    grid or bisection for the lowest level only.
    """

    grid_delta: float = 0.01
    max_steps: int | tuple[int, ...] = 100
    responders: int | str | tuple = "all"
    epsilon_limit: float | tuple[float, ...] = 0.0
    search: str | tuple[str, ...] = GRID
    restart_budget: int = 20
    seed: int = 0
    tie_tol: float = TIE_TOL

    def __post_init__(self):
        _ = self.n_intervals
        if self.restart_budget < 0:
            raise ValueError("restart budget must be non-negative")

    @property
    def n_intervals(self) -> int:
        n = round(1.0 / self.grid_delta)
        if n < 1 or abs(n * self.grid_delta - 1.0) > 1e-9:
            raise ValueError(f"grid delta {self.grid_delta} must divide 1 exactly")
        return n

    @property
    def n_points(self) -> int:
        return self.n_intervals + 1

    def level_params(self, tree: PlayerTree) -> dict[int, LevelParams]:
        L = tree.n_levels
        steps = _per_level(self.max_steps, L, "max_steps")
        ks = _per_level(self.responders, L, "responders")
        eps = _per_level(self.epsilon_limit, L, "epsilon_limit")
        search = _per_level(self.search, L, "search")
        out = {}
        for l in range(2, L + 1):
            n_l = tree.size(l)
            T, k, e, s = steps[l - 2], ks[l - 2], eps[l - 2], str(search[l - 2]).lower()
            k = n_l if k == "all" else int(k)
            if int(T) < 1:
                raise ValueError(f"level {l}: max_steps must be >= 1")
            if not 1 <= k <= n_l:
                raise ValueError(f"level {l}: responders must lie in [1, {n_l}], got {k}")
            if float(e) < 0:
                raise ValueError(f"level {l}: epsilon limit must be >= 0")
            if s not in (GRID, BISECTION):
                raise ValueError(f"level {l}: unknown search method {s!r}")
            if s == BISECTION and l != L:
                raise ValueError(f"level {l}: bisection is only supported on the lowest level")
            out[l] = LevelParams(int(T), k, float(e), s)
        return out


@dataclass(frozen=True)
class LevelDiagnostics:
    level: int
    steps: int
    cycles: int
    restarts: int
    budget_exhausted: bool


@dataclass(frozen=True)
class EquilibriumResult:
    profile: ActionProfile
    grid_profile: tuple[tuple[int, ...], ...]
    epsilons: tuple[float, ...]
    n_intervals: int
    levels: tuple[LevelDiagnostics, ...]
    root_costs: tuple[float, ...]
    root_ties: tuple[float, ...]
    subgames_solved: int
    total_steps: int
    total_cycles: int
    total_restarts: int
    wall_time: float = field(default=0.0, compare=False)

    @property
    def epsilon_max(self) -> float:
        return max(self.epsilons)

    @property
    def budget_exhausted(self) -> bool:
        return any(d.budget_exhausted for d in self.levels)


@dataclass(frozen=True)
class Subgame:
    """Equilibrium of levels ``level..L`` for one parent-level profile."""

    level: int
    actions: tuple[GridProfile, ...]
    epsilons: tuple[float, ...]
    diagnostics: tuple[LevelDiagnostics, ...]


class LeafCosts:
    """Fast scalar point queries of a leaf's overall cost under unilateral deviation."""

    def __init__(self, tree: PlayerTree, epi: EpidemicParams, mode: ComplianceMode):
        L = tree.n_levels
        self.n = tree.size(L)
        r = epi.transport.entries
        self.r_diag = np.diag(r).tolist()
        self.r_off = r - np.diag(np.diag(r))
        self.pop = epi.populations
        self.inf = epi.initial_infected
        self.pop_l = self.pop.tolist()
        self.inf_l = self.inf.tolist()
        self.sus_share = [
            (n - i) / n if n > 0 else 0.0 for n, i in zip(self.pop_l, self.inf_l)
        ]
        self.kappa = tree.kappa_arrays[L - 1].tolist()
        self.eta = tree.eta_arrays[L - 1].tolist()
        self.gamma = tree.gamma_arrays[L - 1].tolist()
        self.parent = tree.parent_arrays[L - 1].tolist()
        self.contact = epi.contact_mean
        self.log_escape = epi.log_escape
        self.one_sided = mode is ComplianceMode.ONE_SIDED

    def others(self, alpha: np.ndarray) -> tuple[list[float], list[float]]:
        """Infected and total active mass reaching each leaf from the other leaves."""
        return (self.r_off @ (self.inf * alpha)).tolist(), (self.r_off @ (self.pop * alpha)).tolist()

    def cost(self, i: int, x: float, num_other: float, den_other: float, parent_alpha: float) -> float:
        rd = self.r_diag[i]
        num = num_other + self.inf_l[i] * rd * x
        den = den_other + self.pop_l[i] * rd * x
        rho = num / den if den > 0 else 0.0
        prob = -math.expm1(self.contact * math.expm1(rho * self.log_escape))
        impact = self.sus_share[i] * x * prob
        d = x - parent_alpha
        if self.one_sided and d < 0:
            d = 0.0
        return self.kappa[i] * impact + self.eta[i] * (1.0 - x) + self.gamma[i] * d * d


class LeafLevelGame:
    def __init__(
        self,
        costs: LeafCosts,
        parent_alpha: Sequence[float],
        n_intervals: int,
        search: str = GRID,
        tie_tol: float = TIE_TOL,
    ):
        self.costs = costs
        self.n_players = costs.n
        self.n_intervals = n_intervals
        self.n_points = n_intervals + 1
        self.search = search
        self.tie_tol = tie_tol
        self.parent_alpha = [float(parent_alpha[p]) for p in costs.parent]
        self.fallbacks = 0

    def respond(self, i: int, alpha: np.ndarray, current: float, others=None) -> tuple[int, float, float]:
        """Best grid response of leaf ``i``; returns (index, best cost, current cost)."""
        nums, dens = others if others is not None else self.costs.others(alpha)
        n = self.n_intervals
        num_o, den_o, pa = nums[i], dens[i], self.parent_alpha[i]
        cost = self.costs.cost

        def f(j: int) -> float:
            return cost(i, j / n, num_o, den_o, pa)

        if self.search == BISECTION:
            j, best, ok = ternary_argmin(f, self.n_points, self.tie_tol)
            if not ok:
                self.fallbacks += 1
                j, best = grid_argmin(f, self.n_points, self.tie_tol)
        else:
            j, best = grid_argmin(f, self.n_points, self.tie_tol)
        return j, best, cost(i, current, num_o, den_o, pa)

    def responses(self, profile: GridProfile) -> list[Response]:
        alpha = np.asarray(profile, dtype=float) / self.n_intervals
        others = self.costs.others(alpha)
        out = []
        for i in range(self.n_players):
            j, best, cur = self.respond(i, alpha, profile[i] / self.n_intervals, others)
            if j == profile[i]:
                best = cur
            out.append(Response(j, best, cur, self.tie_tol))
        return out


class InnerLevelGame:
    """Level game above the leaves: each candidate re-solves the levels below."""

    def __init__(self, solver: "HierarchicalSolver", level: int, parent_profile: GridProfile):
        self.solver = solver
        self.level = level
        self.parent_profile = parent_profile
        self.n_players = solver.tree.size(level)
        self.n_points = solver.n_points
        self.tie_tol = solver.params.tie_tol
        self._cache: dict[GridProfile, tuple[np.ndarray, np.ndarray]] = {}

    def evaluate(self, profile: GridProfile) -> tuple[np.ndarray, np.ndarray]:
        """Overall and social costs of this level's players, lower levels re-solved."""
        hit = self._cache.get(profile)
        if hit is None:
            sub = self.solver.subgame(self.level + 1, profile)
            grid = (self.parent_profile, profile) + sub.actions
            bd = self.solver.evaluate_grid(grid, first_level=self.level - 1)
            hit = (bd.overall[self.level - 1], bd.social[self.level - 1])
            self._cache[profile] = hit
        return hit

    def candidates(self, i: int, profile: GridProfile) -> tuple[list[float], list[float]]:
        costs, socials = [], []
        p = list(profile)
        for j in range(self.n_points):
            p[i] = j
            oc, sc = self.evaluate(tuple(p))
            costs.append(float(oc[i]))
            socials.append(float(sc[i]))
        return costs, socials

    def responses(self, profile: GridProfile) -> list[Response]:
        out = []
        for i in range(self.n_players):
            costs, socials = self.candidates(i, profile)
            j = mi_argmin(costs, socials, self.tie_tol)
            out.append(Response(j, costs[j], costs[profile[i]], self.tie_tol))
        return out


class HierarchicalSolver:
    def __init__(self, tree: PlayerTree, epi: EpidemicParams, mode: ComplianceMode | str, params: SolverParams):
        if epi.n_leaves != tree.size(tree.n_levels):
            raise ValueError(f"epidemic parameters cover {epi.n_leaves} leaves, tree has {tree.size(tree.n_levels)}")
        self.tree = tree
        self.epi = epi
        self.mode = ComplianceMode.parse(mode)
        self.params = params
        self.level_params = params.level_params(tree)
        self.n_intervals = params.n_intervals
        self.n_points = params.n_points
        self.leaf_costs = LeafCosts(tree, epi, self.mode)
        self._subgames: dict[tuple[int, GridProfile], Subgame] = {}
        self.total_steps = self.total_cycles = self.total_restarts = 0

    def alpha(self, grid_levels: Sequence[GridProfile]) -> list[np.ndarray]:
        return [np.asarray(g, dtype=float) / self.n_intervals for g in grid_levels]

    def evaluate_grid(self, grid_levels: Sequence[GridProfile], first_level: int = 1):
        """Cost breakdown for grid actions of levels ``first_level..L``."""
        actions: list = [None] * (first_level - 1) + self.alpha(grid_levels)
        return evaluate_levels(self.tree, self.epi, self.mode, actions)

    def rng(self, level: int, parent_profile: GridProfile) -> np.random.Generator:
        return np.random.default_rng([self.params.seed, level, *parent_profile])

    def level_game(self, level: int, parent_profile: GridProfile, search: str | None = None):
        if level == self.tree.n_levels:
            lp = self.level_params[level]
            parent_alpha = [g / self.n_intervals for g in parent_profile]
            return LeafLevelGame(self.leaf_costs, parent_alpha, self.n_intervals, search or lp.search, self.params.tie_tol)
        return InnerLevelGame(self, level, parent_profile)

    def run_level(
        self, level: int, parent_profile: GridProfile, memory: ProfileMemory | None = None
    ) -> BrdOutcome:
        lp = self.level_params[level]
        game = self.level_game(level, parent_profile)
        out = run_brd(
            game,
            self.rng(level, parent_profile),
            max_steps=lp.max_steps,
            responders=lp.responders,
            epsilon_limit=lp.epsilon_limit,
            restart_budget=self.params.restart_budget,
            memory=memory,
        )
        self.total_steps += out.steps
        self.total_cycles += out.cycles
        self.total_restarts += out.restarts
        return out

    def subgame(self, level: int, parent_profile: GridProfile) -> Subgame:
        key = (level, tuple(parent_profile))
        hit = self._subgames.get(key)
        if hit is not None:
            return hit
        out = self.run_level(level, key[1])
        diag = LevelDiagnostics(level, out.steps, out.cycles, out.restarts, out.budget_exhausted)
        if level < self.tree.n_levels:
            lower = self.subgame(level + 1, out.profile)
            sub = Subgame(
                level,
                (out.profile,) + lower.actions,
                (out.epsilon,) + lower.epsilons,
                (diag,) + lower.diagnostics,
            )
        else:
            sub = Subgame(level, (out.profile,), (out.epsilon,), (diag,))
        self._subgames[key] = sub
        return sub

    @property
    def subgames_solved(self) -> int:
        return len(self._subgames)

    def root_scan(self) -> tuple[list[float], list[float], list[Subgame]]:
        costs, socials, subs = [], [], []
        for j in range(self.n_points):
            sub = self.subgame(2, (j,))
            bd = self.evaluate_grid(((j,),) + sub.actions)
            costs.append(float(bd.overall[0][0]))
            socials.append(float(bd.social[0][0]))
            subs.append(sub)
        return costs, socials, subs

    def solve(self) -> EquilibriumResult:
        start = time.perf_counter()
        tol = self.params.tie_tol
        costs, socials, subs = self.root_scan()
        j = mi_argmin(costs, socials, tol)
        best = min(costs)
        ties = [k for k, c in enumerate(costs) if c <= best + tol]
        eps_root = costs[j] - best
        sub = subs[j]
        grid = ((j,),) + sub.actions
        root_diag = LevelDiagnostics(1, 0, 0, 0, False)
        return EquilibriumResult(
            profile=ActionProfile(tuple(tuple(a.tolist()) for a in self.alpha(grid))),
            grid_profile=grid,
            epsilons=(eps_root if eps_root > tol else 0.0,) + sub.epsilons,
            n_intervals=self.n_intervals,
            levels=(root_diag,) + sub.diagnostics,
            root_costs=tuple(costs),
            root_ties=tuple(k / self.n_intervals for k in ties),
            subgames_solved=self.subgames_solved,
            total_steps=self.total_steps,
            total_cycles=self.total_cycles,
            total_restarts=self.total_restarts,
            wall_time=time.perf_counter() - start,
        )


def solve_hg_pspne(
    tree: PlayerTree, epi: EpidemicParams, mode: ComplianceMode | str, params: SolverParams | None = None
) -> EquilibriumResult:
    """Approximate minimal-impact subgame-perfect equilibrium on the action grid.

    The root scans every grid action, each valued by solving levels ``2..L``.
    Among root actions whose cost ties the minimum, the one with the lowest
    social cost is chosen, and then the largest action.
    """
    return HierarchicalSolver(tree, epi, mode, params or SolverParams()).solve()


def _grid_index(alpha: float, n: int, what: str) -> int:
    j = round(alpha * n)
    if abs(j - alpha * n) > 1e-9:
        raise SolverError(f"{what} = {alpha} is not on the action grid (1/{n})")
    return j


def best_response(
    a: PlayerId,
    profile: ActionProfile | PartialProfile,
    tree: PlayerTree,
    epi: EpidemicParams,
    mode: ComplianceMode | str,
    params: SolverParams | None = None,
) -> float:
    """Grid best response of player ``a`` with everyone else held fixed.

    For a leaf the other leaves' and the parent's actions are read from
    ``profile`` (any values in [0, 1]).  For an inner player, ``profile`` must
    cover levels ``1..a.level`` on the grid; every candidate re-solves the
    levels below, and ties go to the lower social cost, then the larger action.
    """
    params = params or SolverParams()
    solver = HierarchicalSolver(tree, epi, mode, params)
    n = solver.n_intervals
    if a.level == 1:
        costs, socials, _ = solver.root_scan()
        return mi_argmin(costs, socials, params.tie_tol) / n
    if profile.depth < a.level:
        raise ValueError(f"profile must cover levels 1..{a.level}")
    if tree.is_leaf(a):
        if profile.depth != tree.n_levels:
            raise ValueError("a leaf best response needs the whole leaf level")
        parent = profile.level(a.level - 1)
        game = LeafLevelGame(solver.leaf_costs, parent, n, solver.level_params[a.level].search, params.tie_tol)
        alpha = profile.level(a.level)
        j, _, _ = game.respond(a.index, alpha, float(alpha[a.index]))
        return j / n
    parent = tuple(_grid_index(x, n, f"level {a.level - 1} action") for x in profile.levels[a.level - 2])
    own = tuple(_grid_index(x, n, f"level {a.level} action") for x in profile.levels[a.level - 1])
    game = InnerLevelGame(solver, a.level, parent)
    costs, socials = game.candidates(a.index, own)
    return mi_argmin(costs, socials, params.tie_tol) / n


def brd_level(
    level: int,
    upper: PartialProfile,
    tree: PlayerTree,
    epi: EpidemicParams,
    mode: ComplianceMode | str,
    params: SolverParams | None = None,
    memory: ProfileMemory | None = None,
) -> tuple[tuple[float, ...], float, BrdOutcome]:
    """Best-response dynamics among the players of ``level`` given levels above.

    Returns the chosen level profile, its epsilon and the raw outcome.
    """
    params = params or SolverParams()
    if level < 2:
        raise ValueError("level 1 has a single player; use solve_hg_pspne")
    if upper.depth < level - 1:
        raise ValueError(f"need actions for levels 1..{level - 1}")
    solver = HierarchicalSolver(tree, epi, mode, params)
    n = solver.n_intervals
    parent = tuple(_grid_index(x, n, f"level {level - 1} action") for x in upper.levels[level - 2])
    out = solver.run_level(level, parent, memory)
    return tuple(j / n for j in out.profile), out.epsilon, out


def level_epsilon(
    level: int,
    profile: ActionProfile | PartialProfile,
    tree: PlayerTree,
    epi: EpidemicParams,
    mode: ComplianceMode | str,
    params: SolverParams | None = None,
) -> float:
    """Epsilon of the level-``level`` players in ``profile``.

    Deviations by inner players are valued with the levels below re-solved.
    """
    from hpmg.solver.brd import epsilon_of_profile

    params = params or SolverParams()
    solver = HierarchicalSolver(tree, epi, mode, params)
    n = solver.n_intervals
    if level == 1:
        costs, _, _ = solver.root_scan()
        j = _grid_index(profile.levels[0][0], n, "root action")
        g = costs[j] - min(costs)
        return g if g > params.tie_tol else 0.0
    parent = tuple(_grid_index(x, n, f"level {level - 1} action") for x in profile.levels[level - 2])
    own = tuple(_grid_index(x, n, f"level {level} action") for x in profile.levels[level - 1])
    return epsilon_of_profile(solver.level_game(level, parent, GRID), own)
