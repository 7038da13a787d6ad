"""Best-response dynamics for the simultaneous-move game played within one level."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from hpmg.solver.search import TIE_TOL

GridProfile = tuple[int, ...]


@dataclass(frozen=True)
class Response:
    """A player's tie-broken best response against a fixed level profile."""

    action: int
    best_cost: float
    current_cost: float
    tie_tol: float = TIE_TOL

    @property
    def gain(self) -> float:
        g = self.current_cost - self.best_cost
        return g if g > self.tie_tol else 0.0


class LevelGame(Protocol):
    n_players: int
    n_points: int

    def responses(self, profile: GridProfile) -> list[Response]: ...


class ProfileMemory:
    """Visited level profiles, keyed by exact grid coordinates."""

    def __init__(self, profiles: Sequence[GridProfile] = ()):
        self._seen: set[GridProfile] = set(tuple(p) for p in profiles)

    def __contains__(self, profile: GridProfile) -> bool:
        return tuple(profile) in self._seen

    def add(self, profile: GridProfile) -> None:
        self._seen.add(tuple(profile))

    def __len__(self) -> int:
        return len(self._seen)


@dataclass
class BrdOutcome:
    profile: GridProfile
    epsilon: float
    steps: int = 0
    cycles: int = 0
    restarts: int = 0
    converged: bool = False
    budget_exhausted: bool = False
    history: list[float] = field(default_factory=list)


def epsilon_of_profile(game: LevelGame, profile: GridProfile) -> float:
    """Largest cost reduction any single player gets by deviating on the grid."""
    return max((r.gain for r in game.responses(tuple(profile))), default=0.0)


def random_profile(rng: np.random.Generator, n_players: int, n_points: int) -> GridProfile:
    return tuple(int(x) for x in rng.integers(0, n_points, size=n_players))


def run_brd(
    game: LevelGame,
    rng: np.random.Generator,
    *,
    max_steps: int,
    responders: int,
    epsilon_limit: float = 0.0,
    restart_budget: int = 20,
    initial: GridProfile | None = None,
    memory: ProfileMemory | None = None,
) -> BrdOutcome:
    """Run best-response dynamics and return the lowest-epsilon profile seen.

    Each round every player's best response is computed; ``responders`` of the
    players whose best response differs from their current action are drawn
    without replacement and switch simultaneously.  Revisiting a profile counts
    as a cycle and triggers a jump to a uniformly random profile.
    """
    if memory is None:
        memory = ProfileMemory()
    profile = tuple(initial) if initial is not None else random_profile(rng, game.n_players, game.n_points)
    memory.add(profile)
    out = BrdOutcome(profile=profile, epsilon=float("inf"))

    while True:
        resp = game.responses(profile)
        eps = max((r.gain for r in resp), default=0.0)
        out.history.append(eps)
        movers = [i for i, r in enumerate(resp) if r.action != profile[i]]
        if eps < out.epsilon:
            out.profile, out.epsilon = profile, eps
        if not movers or (epsilon_limit > 0 and eps <= epsilon_limit):
            out.profile, out.epsilon, out.converged = profile, eps, True
            break
        if out.steps >= max_steps:
            break
        k = min(responders, len(movers))
        chosen = rng.choice(len(movers), size=k, replace=False)
        nxt = list(profile)
        for c in chosen:
            i = movers[int(c)]
            nxt[i] = resp[i].action
        out.steps += 1
        new = tuple(nxt)
        if new in memory:
            out.cycles += 1
            if out.restarts >= restart_budget:
                out.budget_exhausted = True
                break
            out.restarts += 1
            new = random_profile(rng, game.n_players, game.n_points)
        memory.add(new)
        profile = new
    return out
