"""Cost components of the hierarchical game and their share-weighted aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from hpmg.infection import EpidemicParams, expected_infections
from hpmg.tree import ActionProfile, ComplianceMode, PlayerId, PlayerTree, require_complete


@dataclass(frozen=True)
class CostBreakdown:
    """Per-level cost arrays; index 0 is the root level.

    ``social`` is NaN on the leaf level, ``noncompliance`` is zero for the root.
    Entries are NaN where the parent's action was not supplied.
    """

    impact: tuple[np.ndarray, ...]
    implementation: tuple[np.ndarray, ...]
    noncompliance: tuple[np.ndarray, ...]
    overall: tuple[np.ndarray, ...]
    social: tuple[np.ndarray, ...]

    def get(self, component: str, pid: PlayerId) -> float:
        return float(getattr(self, component)[pid.level - 1][pid.index])


def noncompliance(alpha, alpha_parent, mode: ComplianceMode):
    diff = np.asarray(alpha, dtype=float) - np.asarray(alpha_parent, dtype=float)
    if mode is ComplianceMode.ONE_SIDED:
        diff = np.maximum(diff, 0.0)
    return diff * diff


def noncompliance_cost(alpha: float, alpha_parent: float, mode: ComplianceMode | str) -> float:
    """Squared deviation from the parent's action; one-sided ignores stricter policies."""
    mode = ComplianceMode.parse(mode)
    d = alpha - alpha_parent
    if mode is ComplianceMode.ONE_SIDED and d < 0:
        return 0.0
    return d * d


def aggregate_up(tree: PlayerTree, leaf_values: np.ndarray) -> list[np.ndarray]:
    """Share-weighted averages of a leaf quantity at every level."""
    L = tree.n_levels
    out: list[np.ndarray] = [None] * L  # type: ignore[list-item]
    out[L - 1] = np.asarray(leaf_values, dtype=float)
    for l in range(L - 1, 0, -1):
        weighted = tree.share_arrays[l] * out[l]
        sums = np.bincount(tree.parent_arrays[l], weights=weighted, minlength=tree.size(l))
        shares = tree.share_arrays[l - 1]
        avg = np.zeros_like(sums)
        np.divide(sums, shares, out=avg, where=shares > 0)
        out[l - 1] = avg
    return out


def evaluate_levels(
    tree: PlayerTree,
    epi: EpidemicParams,
    mode: ComplianceMode,
    actions: Sequence[np.ndarray | None],
) -> CostBreakdown:
    """Cost breakdown from per-level action arrays.

    ``actions[l-1]`` may be ``None`` for levels above the ones of interest;
    the leaf level must always be present.
    """
    L = tree.n_levels
    leaf = np.asarray(actions[L - 1], dtype=float)
    n_leaf = tree.size(L)
    if leaf.shape != (n_leaf,):
        raise ValueError(f"leaf actions have shape {leaf.shape}, expected ({n_leaf},)")
    with np.errstate(divide="ignore", invalid="ignore"):
        pops = epi.populations
        leaf_impact = np.zeros(n_leaf)
        np.divide(expected_infections(leaf, epi), pops, out=leaf_impact, where=pops > 0)
    impact = aggregate_up(tree, leaf_impact)
    implementation = aggregate_up(tree, 1.0 - leaf)

    nc: list[np.ndarray] = [np.zeros(1)]
    overall: list[np.ndarray] = []
    root_kappa = tree.kappa_arrays[0]
    overall.append(root_kappa * impact[0] + (1.0 - root_kappa) * implementation[0])
    for l in range(2, L + 1):
        own, above = actions[l - 1], actions[l - 2]
        if own is None or above is None:
            nc.append(np.full(tree.size(l), np.nan))
        else:
            parent_alpha = np.asarray(above, dtype=float)[tree.parent_arrays[l - 1]]
            nc.append(noncompliance(own, parent_alpha, mode))
        overall.append(
            tree.kappa_arrays[l - 1] * impact[l - 1]
            + tree.eta_arrays[l - 1] * implementation[l - 1]
            + tree.gamma_arrays[l - 1] * nc[l - 1]
        )

    social: list[np.ndarray] = []
    for l in range(1, L):
        weighted = tree.share_arrays[l] * overall[l]
        sums = np.bincount(tree.parent_arrays[l], weights=weighted, minlength=tree.size(l))
        shares = tree.share_arrays[l - 1]
        sc = np.zeros_like(sums)
        np.divide(sums, shares, out=sc, where=shares > 0)
        social.append(sc)
    social.append(np.full(n_leaf, np.nan))
    return CostBreakdown(tuple(impact), tuple(implementation), tuple(nc), tuple(overall), tuple(social))


def evaluate_costs(
    profile: ActionProfile, tree: PlayerTree, epi: EpidemicParams, mode: ComplianceMode | str
) -> CostBreakdown:
    profile = require_complete(profile, tree)
    actions = [np.asarray(lv, dtype=float) for lv in profile.levels]
    return evaluate_levels(tree, epi, ComplianceMode.parse(mode), actions)


def implementation_cost(a: PlayerId, profile: ActionProfile, tree: PlayerTree) -> float:
    """``1 - alpha`` for a leaf; share-weighted average of the children above."""
    profile = require_complete(profile, tree)
    leaf = np.asarray(profile.levels[-1], dtype=float)
    return float(aggregate_up(tree, 1.0 - leaf)[a.level - 1][a.index])


def impact_cost(a: PlayerId, profile: ActionProfile, tree: PlayerTree, epi: EpidemicParams) -> float:
    """Expected new infections per capita, aggregated by shares above the leaves."""
    profile = require_complete(profile, tree)
    leaf = np.asarray(profile.levels[-1], dtype=float)
    per_capita = np.zeros(tree.size(tree.n_levels))
    np.divide(expected_infections(leaf, epi), epi.populations, out=per_capita, where=epi.populations > 0)
    return float(aggregate_up(tree, per_capita)[a.level - 1][a.index])


def overall_cost(
    a: PlayerId, profile: ActionProfile, tree: PlayerTree, epi: EpidemicParams, mode: ComplianceMode | str
) -> float:
    return evaluate_costs(profile, tree, epi, mode).get("overall", a)


def social_cost(
    a: PlayerId, profile: ActionProfile, tree: PlayerTree, epi: EpidemicParams, mode: ComplianceMode | str
) -> float:
    """Share-weighted average of the children's overall costs."""
    if tree.is_leaf(a):
        raise ValueError(f"{a} is a leaf and has no social cost")
    return evaluate_costs(profile, tree, epi, mode).get("social", a)
