"""Closed-form expected infections under a transport-coupled contact process.

Every susceptible, active individual in county ``a`` meets ``X ~ Poisson(C)``
active people, a fraction ``rho_a`` of whom are infected; each infected
contact transmits independently with probability ``p``.  Averaging over the
Poisson contact count gives the closed form used by the game.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hpmg.tree import PlayerId, PlayerTree

COLUMN_TOL = 1e-9


class TransportError(ValueError):
    pass


@dataclass(frozen=True)
class TransportMatrix:
    """``entries[a, b]``: fraction of origin ``b``'s population active in ``a``.

    Rows are destinations, columns are origins; every column sums to one.
    """

    entries: np.ndarray

    def __post_init__(self):
        r = np.array(self.entries, dtype=float)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise TransportError(f"transport matrix must be square, got shape {r.shape}")
        if np.any(r < 0):
            raise TransportError("transport entries must be non-negative")
        cols = r.sum(axis=0)
        bad = np.flatnonzero(np.abs(cols - 1.0) > COLUMN_TOL)
        if bad.size:
            raise TransportError(f"transport column {int(bad[0])} sums to {cols[bad[0]]:.12g}, expected 1")
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        return isinstance(other, TransportMatrix) and np.array_equal(self.entries, other.entries)

    __hash__ = None  # type: ignore[assignment]


def make_transport_matrix(
    kind: str,
    n_leaves: int,
    *,
    favorites: Sequence[int] | None = None,
    share: float | None = None,
    per: str = "aggregate",
) -> TransportMatrix:
    """Build a symmetric or favorite-destination transport matrix.

    ``kind="symmetric"`` puts ``1/n`` everywhere.  ``kind="favorites"`` sends
    ``share`` of every origin's active population to the favorite set: split
    equally among the favorites when ``per="aggregate"``, or ``share`` to each
    favorite when ``per="leaf"``.  The rest is split equally over the other
    leaves, and each favorite must receive strictly more than each non-favorite.
    """
    if n_leaves < 1:
        raise TransportError("need at least one leaf")
    if kind == "symmetric":
        return TransportMatrix(np.full((n_leaves, n_leaves), 1.0 / n_leaves))
    if kind != "favorites":
        raise TransportError(f"unknown transport kind {kind!r}")
    fav = sorted(set(int(f) for f in favorites or ()))
    if not fav or len(fav) >= n_leaves or fav[0] < 0 or fav[-1] >= n_leaves:
        raise TransportError("favorites must be a nonempty proper subset of the leaves")
    if share is None:
        raise TransportError("favorites transport needs a share")
    if per == "aggregate":
        if not 0.0 < share < 1.0:
            raise TransportError(f"aggregate favorite share must lie in (0, 1), got {share}")
        r_high = share / len(fav)
        rest = 1.0 - share
    elif per == "leaf":
        r_high = share
        rest = 1.0 - share * len(fav)
        if not 0.0 < share < 1.0 or rest <= 0.0:
            raise TransportError(f"per-leaf favorite share {share} infeasible for {len(fav)} favorites")
    else:
        raise TransportError(f"unknown favorites interpretation {per!r}")
    r_low = rest / (n_leaves - len(fav))
    if not r_high > r_low:
        raise TransportError(f"favorite entry {r_high:.6g} must exceed non-favorite entry {r_low:.6g}")
    r = np.full((n_leaves, n_leaves), r_low)
    r[fav, :] = r_high
    return TransportMatrix(r)


def aggregate_transport(
    transport: TransportMatrix, populations: Sequence[float], groups: Sequence[int]
) -> TransportMatrix:
    """Population-weighted transport between groups of leaves."""
    r = transport.entries
    pops = np.asarray(populations, dtype=float)
    groups = np.asarray(groups)
    n_groups = int(groups.max()) + 1
    out = np.zeros((n_groups, n_groups))
    for g_to in range(n_groups):
        rows = groups == g_to
        for g_from in range(n_groups):
            cols = groups == g_from
            out[g_to, g_from] = (r[np.ix_(rows, cols)] @ pops[cols]).sum() / pops[cols].sum()
    return TransportMatrix(out)


@dataclass(frozen=True)
class EpidemicParams:
    transport: TransportMatrix
    populations: np.ndarray
    initial_infected: np.ndarray
    contact_mean: float = 15.0
    transmission_prob: float = 0.047

    def __post_init__(self):
        pops = np.array(self.populations, dtype=float)
        inf = np.array(self.initial_infected, dtype=float)
        if pops.shape != (self.transport.n,) or inf.shape != pops.shape:
            raise ValueError(
                f"populations/initial_infected must have length {self.transport.n}, "
                f"got {pops.shape} and {inf.shape}"
            )
        if np.any(pops < 0) or np.any(inf < 0):
            raise ValueError("populations and initial infections must be non-negative")
        if np.any(inf > pops):
            raise ValueError("initial infections exceed population")
        if not self.contact_mean > 0:
            raise ValueError(f"contact mean must be positive, got {self.contact_mean}")
        # p = 0 is allowed as a no-transmission control
        if not 0.0 <= self.transmission_prob < 1.0:
            raise ValueError(f"transmission probability must lie in [0, 1), got {self.transmission_prob}")
        pops.setflags(write=False)
        inf.setflags(write=False)
        object.__setattr__(self, "populations", pops)
        object.__setattr__(self, "initial_infected", inf)

    @property
    def n_leaves(self) -> int:
        return self.transport.n

    @property
    def log_escape(self) -> float:
        """``log(1 - p)``."""
        return math.log1p(-self.transmission_prob)

    @classmethod
    def from_tree(
        cls,
        tree: PlayerTree,
        transport: TransportMatrix,
        contact_mean: float = 15.0,
        transmission_prob: float = 0.047,
    ) -> "EpidemicParams":
        pops, inf = [], []
        for node in tree.leaves:
            if node.population is None:
                raise ValueError(f"{node.label}: leaf has no population")
            pops.append(node.population)
            inf.append(node.initial_infected or 0.0)
        return cls(transport, np.array(pops), np.array(inf), contact_mean, transmission_prob)


def _leaf_index(a: PlayerId | int) -> int:
    return a.index if isinstance(a, PlayerId) else int(a)


def active_infected_fractions(leaf_actions: Sequence[float], epi: EpidemicParams) -> np.ndarray:
    """Fraction of infected individuals among those active in each leaf.

    A leaf with no active individuals at all gets 0.
    """
    alpha = np.asarray(leaf_actions, dtype=float)
    r = epi.transport.entries
    num = r @ (epi.initial_infected * alpha)
    den = r @ (epi.populations * alpha)
    out = np.zeros_like(den)
    np.divide(num, den, out=out, where=den > 0)
    return out


def active_infected_fraction(a: PlayerId | int, leaf_actions: Sequence[float], epi: EpidemicParams) -> float:
    return float(active_infected_fractions(leaf_actions, epi)[_leaf_index(a)])


def infection_probability(rho, epi: EpidemicParams):
    """Probability an active susceptible is infected: ``1 - exp(-C (1 - (1-p)^rho))``."""
    not_escaped = -np.expm1(np.asarray(rho, dtype=float) * epi.log_escape)
    return -np.expm1(-epi.contact_mean * not_escaped)


def expected_infections(leaf_actions: Sequence[float], epi: EpidemicParams) -> np.ndarray:
    """Expected additional infections in every leaf."""
    alpha = np.asarray(leaf_actions, dtype=float)
    rho = active_infected_fractions(alpha, epi)
    susceptible = (epi.populations - epi.initial_infected) * alpha
    return susceptible * infection_probability(rho, epi)


def expected_new_infections(a: PlayerId | int, leaf_actions: Sequence[float], epi: EpidemicParams) -> float:
    return float(expected_infections(leaf_actions, epi)[_leaf_index(a)])


def poisson_power_moment(lam: float, b: float) -> float:
    """``E[b**Z]`` for ``Z ~ Poisson(lam)``."""
    if lam < 0:
        raise ValueError(f"Poisson mean must be non-negative, got {lam}")
    return math.exp(-lam * (1.0 - b))
