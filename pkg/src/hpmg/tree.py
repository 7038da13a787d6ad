"""Player hierarchy, weight vectors and action profiles."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator, Mapping, Sequence

import numpy as np

SHARE_TOL = 1e-9


class HierarchyError(ValueError):
    """Raised when a hierarchy description violates a structural constraint."""


class ProfileError(ValueError):
    """Raised when an action profile does not fit the tree it is used with."""


class ComplianceMode(enum.Enum):
    ONE_SIDED = "one-sided"
    TWO_SIDED = "two-sided"

    @classmethod
    def parse(cls, value: "str | ComplianceMode") -> "ComplianceMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for mode in cls:
            if mode.value == key:
                return mode
        raise ValueError(f"unknown compliance mode {value!r}; expected 'one-sided' or 'two-sided'")


@dataclass(frozen=True, order=True)
class PlayerId:
    """Address of a player: 1-based level, 0-based position within the level."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError(f"level must be >= 1, got {self.level}")
        if self.index < 0:
            raise ValueError(f"index must be >= 0, got {self.index}")

    def __str__(self) -> str:
        return f"a[{self.level},{self.index}]"


@dataclass(frozen=True)
class WeightVector:
    """Convex weights on impact, implementation and non-compliance cost."""

    kappa: float
    eta: float

    def __post_init__(self):
        if self.kappa < 0 or self.eta < 0:
            raise HierarchyError(f"weights must be non-negative (kappa={self.kappa}, eta={self.eta})")
        if self.kappa + self.eta > 1 + 1e-12:
            raise HierarchyError(f"kappa + eta must not exceed 1 (kappa={self.kappa}, eta={self.eta})")

    @property
    def gamma(self) -> float:
        return max(0.0, 1.0 - self.kappa - self.eta)

    @classmethod
    def root(cls, kappa: float) -> "WeightVector":
        return cls(kappa, 1.0 - kappa)


@dataclass(frozen=True)
class PlayerNode:
    id: PlayerId
    share: float
    weights: WeightVector
    parent: int | None = None
    children: tuple[int, ...] = ()
    population: float | None = None
    initial_infected: float | None = None
    name: str = ""

    def __post_init__(self):
        if not 0.0 <= self.share <= 1.0 + SHARE_TOL:
            raise HierarchyError(f"{self.label}: share {self.share} outside [0, 1]")
        if self.population is not None and self.population < 0:
            raise HierarchyError(f"{self.label}: negative population")
        if self.initial_infected is not None:
            if self.initial_infected < 0:
                raise HierarchyError(f"{self.label}: negative initial infections")
            if self.population is not None and self.initial_infected > self.population:
                raise HierarchyError(f"{self.label}: initial infections exceed population")

    @property
    def label(self) -> str:
        return self.name or str(self.id)


@dataclass(frozen=True)
class PlayerTree:
    """Rooted tree of policy-makers; ``levels[0]`` holds the single root.

    All leaves sit on the last level.  Internal shares equal the sum of their
    children's shares and the leaf shares sum to one.
    """

    levels: tuple[tuple[PlayerNode, ...], ...]

    def __post_init__(self):
        _validate_tree(self.levels)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, l: int) -> tuple[PlayerNode, ...]:
        if not 1 <= l <= self.n_levels:
            raise IndexError(f"level {l} outside [1, {self.n_levels}]")
        return self.levels[l - 1]

    def size(self, l: int) -> int:
        return len(self.level(l))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(lv) for lv in self.levels)

    def node(self, pid: PlayerId) -> PlayerNode:
        nodes = self.level(pid.level)
        if pid.index >= len(nodes):
            raise IndexError(f"{pid} outside level of size {len(nodes)}")
        return nodes[pid.index]

    @property
    def root(self) -> PlayerNode:
        return self.levels[0][0]

    def is_leaf(self, pid: PlayerId) -> bool:
        return pid.level == self.n_levels

    def children(self, pid: PlayerId) -> list[PlayerId]:
        return [PlayerId(pid.level + 1, c) for c in self.node(pid).children]

    def parent(self, pid: PlayerId) -> PlayerId | None:
        node = self.node(pid)
        return None if node.parent is None else PlayerId(pid.level - 1, node.parent)

    def players(self) -> Iterator[PlayerId]:
        for l, nodes in enumerate(self.levels, start=1):
            for i in range(len(nodes)):
                yield PlayerId(l, i)

    @property
    def leaves(self) -> tuple[PlayerNode, ...]:
        return self.levels[-1]

    # Vectorised views, one array per level (index 0 is level 1).

    @cached_property
    def share_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(_frozen([n.share for n in lv]) for lv in self.levels)

    @cached_property
    def parent_arrays(self) -> tuple[np.ndarray, ...]:
        out = [np.zeros(0, dtype=np.intp)]
        for lv in self.levels[1:]:
            arr = np.array([n.parent for n in lv], dtype=np.intp)
            arr.setflags(write=False)
            out.append(arr)
        return tuple(out)

    @cached_property
    def kappa_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(_frozen([n.weights.kappa for n in lv]) for lv in self.levels)

    @cached_property
    def eta_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(_frozen([n.weights.eta for n in lv]) for lv in self.levels)

    @cached_property
    def gamma_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(_frozen([n.weights.gamma for n in lv]) for lv in self.levels)

    def leaf_ancestor(self, l: int) -> np.ndarray:
        """Index of each leaf's ancestor on level ``l``."""
        idx = np.arange(self.size(self.n_levels))
        for lv in range(self.n_levels, l, -1):
            idx = self.parent_arrays[lv - 1][idx]
        return idx

    def to_spec(self) -> dict[str, Any]:
        """Inverse of :func:`build_hierarchy` (explicit shares included)."""
        levels = []
        for l, nodes in enumerate(self.levels, start=1):
            rows = []
            for n in nodes:
                row: dict[str, Any] = {}
                if n.name:
                    row["name"] = n.name
                if l > 1:
                    row["parent"] = n.parent
                row["kappa"] = n.weights.kappa
                if l > 1:
                    row["eta"] = n.weights.eta
                if l == self.n_levels:
                    if n.population is not None:
                        row["population"] = n.population
                        row["infected"] = n.initial_infected
                    else:
                        row["share"] = n.share
                rows.append(row)
            levels.append(rows)
        return {"levels": levels}


def _frozen(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


def _validate_tree(levels: Sequence[Sequence[PlayerNode]]) -> None:
    L = len(levels)
    if L <= 1:
        raise HierarchyError(f"a hierarchy needs L > 1 levels, got {L}")
    if len(levels[0]) != 1:
        raise HierarchyError(f"level 1 must hold exactly one root player, got {len(levels[0])}")
    for l, nodes in enumerate(levels, start=1):
        if not nodes:
            raise HierarchyError(f"level {l} is empty")
        for i, n in enumerate(nodes):
            if n.id != PlayerId(l, i):
                raise HierarchyError(f"node at level {l} position {i} carries id {n.id}")
            if l == 1:
                if n.parent is not None:
                    raise HierarchyError("the root cannot have a parent")
            elif n.parent is None or not 0 <= n.parent < len(levels[l - 2]):
                raise HierarchyError(f"{n.label}: orphan node (parent {n.parent!r} not on level {l - 1})")
            if l < L and not n.children:
                raise HierarchyError(f"{n.label}: non-leaf player without children (all leaves must be on level {L})")
            if l == L and n.children:
                raise HierarchyError(f"{n.label}: leaf-level player with children")
        if l > 1:
            for i, n in enumerate(nodes):
                if i not in levels[l - 2][n.parent].children:
                    raise HierarchyError(f"{n.label}: parent does not list it as a child")
    leaf_total = sum(n.share for n in levels[-1])
    if abs(leaf_total - 1.0) > SHARE_TOL:
        raise HierarchyError(f"leaf shares must sum to 1, got {leaf_total:.12g}")
    for l in range(L - 1):
        for n in levels[l]:
            total = sum(levels[l + 1][c].share for c in n.children)
            if abs(total - n.share) > SHARE_TOL:
                raise HierarchyError(
                    f"{n.label}: share {n.share:.12g} differs from the sum of its children's shares {total:.12g}"
                )


def build_hierarchy(spec: Mapping[str, Any]) -> PlayerTree:
    """Build a validated :class:`PlayerTree` from a nested description.

    ``spec["levels"]`` is a list of levels, each a list of player mappings.
    Non-root players name their ``parent`` (index on the level above).  The
    root takes ``kappa`` only; other players take ``kappa`` and ``eta``.
    Leaves take ``population`` and ``infected``, or an explicit ``share``;
    when both a population and a share are given they must agree.
    """
    raw_levels = spec.get("levels")
    if not isinstance(raw_levels, Sequence) or isinstance(raw_levels, (str, bytes)):
        raise HierarchyError("hierarchy.levels must be a list of levels")
    L = len(raw_levels)
    if L <= 1:
        raise HierarchyError(f"a hierarchy needs L > 1 levels, got {L}")
    if len(raw_levels[0]) != 1:
        raise HierarchyError(f"level 1 must hold exactly one root player, got {len(raw_levels[0])}")

    for l in range(1, L):
        for i, row in enumerate(raw_levels[l]):
            parent = row.get("parent")
            if not isinstance(parent, int) or not 0 <= parent < len(raw_levels[l - 1]):
                raise HierarchyError(f"levels[{l}][{i}]: orphan node (parent {parent!r} not on level {l})")

    # Leaf shares: from populations when every leaf has one, else explicit.
    leaves = raw_levels[-1]
    pops = [row.get("population") for row in leaves]
    if all(p is not None for p in pops):
        total = float(sum(pops))
        if total <= 0:
            raise HierarchyError("leaf populations must have a positive total")
        leaf_shares = [float(p) / total for p in pops]
        for i, row in enumerate(leaves):
            if "share" in row and abs(float(row["share"]) - leaf_shares[i]) > SHARE_TOL:
                raise HierarchyError(
                    f"levels[{L - 1}][{i}]: explicit share {row['share']} inconsistent with population share {leaf_shares[i]:.12g}"
                )
    else:
        missing = [i for i, row in enumerate(leaves) if "share" not in row]
        if missing:
            raise HierarchyError(f"leaves {missing} have neither a population nor a share")
        leaf_shares = [float(row["share"]) for row in leaves]
    leaf_total = sum(leaf_shares)
    if abs(leaf_total - 1.0) > SHARE_TOL:
        raise HierarchyError(f"leaf shares must sum to 1, got {leaf_total:.12g}")

    children: list[list[list[int]]] = [[[] for _ in lv] for lv in raw_levels]
    for l in range(1, L):
        for i, row in enumerate(raw_levels[l]):
            children[l - 1][row["parent"]].append(i)

    shares: list[list[float]] = [[0.0] * len(lv) for lv in raw_levels]
    shares[-1] = leaf_shares
    for l in range(L - 2, -1, -1):
        for i in range(len(raw_levels[l])):
            shares[l][i] = sum(shares[l + 1][c] for c in children[l][i])

    levels = []
    for l, lv in enumerate(raw_levels):
        nodes = []
        for i, row in enumerate(lv):
            where = f"levels[{l}][{i}]"
            if l < L - 1 and "share" in row and abs(float(row["share"]) - shares[l][i]) > SHARE_TOL:
                raise HierarchyError(f"{where}: explicit share {row['share']} inconsistent with children ({shares[l][i]:.12g})")
            kappa = float(row.get("kappa", 0.0))
            if l == 0:
                eta = float(row.get("eta", 1.0 - kappa))
                if abs(kappa + eta - 1.0) > 1e-12:
                    raise HierarchyError(f"{where}: root weights must satisfy kappa + eta = 1")
            else:
                eta = float(row.get("eta", 0.0))
            try:
                weights = WeightVector(kappa, eta)
            except HierarchyError as exc:
                raise HierarchyError(f"{where}: {exc}") from None
            pop = row.get("population") if l == L - 1 else None
            inf = row.get("infected", row.get("initial_infected")) if l == L - 1 else None
            if pop is not None and inf is None:
                inf = 0.0
            nodes.append(
                PlayerNode(
                    id=PlayerId(l + 1, i),
                    share=shares[l][i],
                    weights=weights,
                    parent=None if l == 0 else int(row["parent"]),
                    children=tuple(children[l][i]),
                    population=None if pop is None else float(pop),
                    initial_infected=None if inf is None else float(inf),
                    name=str(row.get("name", "")),
                )
            )
        levels.append(tuple(nodes))
    return PlayerTree(tuple(levels))


@dataclass(frozen=True)
class PartialProfile:
    """Actions for levels ``1..depth`` only; used during backward induction."""

    levels: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", _normalize_levels(self.levels))

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, l: int) -> np.ndarray:
        return np.asarray(self.levels[l - 1], dtype=float)

    def __getitem__(self, pid: PlayerId) -> float:
        return self.levels[pid.level - 1][pid.index]

    def extend(self, actions: Sequence[float]) -> "PartialProfile":
        return PartialProfile(self.levels + (tuple(actions),))

    def complete(self) -> "ActionProfile":
        return ActionProfile(self.levels)


@dataclass(frozen=True)
class ActionProfile:
    """One action in [0, 1] for every player, grouped by level."""

    levels: tuple[tuple[float, ...], ...] = field()

    def __post_init__(self):
        object.__setattr__(self, "levels", _normalize_levels(self.levels))

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level(self, l: int) -> np.ndarray:
        return np.asarray(self.levels[l - 1], dtype=float)

    def __getitem__(self, pid: PlayerId) -> float:
        return self.levels[pid.level - 1][pid.index]

    def restrict(self, l: int) -> PartialProfile:
        return PartialProfile(self.levels[:l])

    def replace(self, pid: PlayerId, alpha: float) -> "ActionProfile":
        lv = list(self.levels[pid.level - 1])
        lv[pid.index] = alpha
        levels = list(self.levels)
        levels[pid.level - 1] = tuple(lv)
        return ActionProfile(tuple(levels))


def _normalize_levels(levels) -> tuple[tuple[float, ...], ...]:
    out = tuple(tuple(float(a) for a in lv) for lv in levels)
    for l, lv in enumerate(out, start=1):
        for a in lv:
            if not 0.0 <= a <= 1.0:
                raise ProfileError(f"action {a} on level {l} outside [0, 1]")
    return out


def require_complete(profile: object, tree: PlayerTree) -> ActionProfile:
    """Return ``profile`` if it assigns an action to every player of ``tree``."""
    if isinstance(profile, PartialProfile):
        raise ProfileError(f"cost queries need a complete profile, got a partial one of depth {profile.depth}")
    if not isinstance(profile, ActionProfile):
        raise TypeError(f"expected ActionProfile, got {type(profile).__name__}")
    if profile.depth != tree.n_levels:
        raise ProfileError(f"profile covers {profile.depth} levels, tree has {tree.n_levels}")
    for l, (lv, n) in enumerate(zip(profile.levels, tree.sizes), start=1):
        if len(lv) != n:
            raise ProfileError(f"level {l}: profile has {len(lv)} actions for {n} players")
    return profile
