import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpmg import (
    ActionProfile,
    ComplianceMode,
    PlayerId,
    evaluate_costs,
    impact_cost,
    implementation_cost,
    noncompliance_cost,
    overall_cost,
    social_cost,
)
from hpmg.tree import ProfileError

from conftest import random_column_stochastic, three_level, two_level

unit = st.floats(0.0, 1.0)


def random_three_level(rng):
    n_states = int(rng.integers(1, 4))
    states = []
    for _ in range(n_states):
        k = rng.uniform(0, 1)
        states.append((k, rng.uniform(0, 1 - k)))
    counties = []
    for s in range(n_states):
        for _ in range(int(rng.integers(1, 4))):
            k = rng.uniform(0, 1)
            pop = int(rng.integers(50, 500))
            counties.append((s, k, rng.uniform(0, 1 - k), pop, int(rng.integers(0, pop + 1))))
    r = random_column_stochastic(rng, len(counties))
    tree, epi = three_level(states, counties, root_kappa=rng.uniform(0, 1), transport=r)
    profile = ActionProfile(tuple(tuple(rng.uniform(0, 1, tree.size(l))) for l in range(1, 4)))
    return tree, epi, profile


def test_leaf_implementation_cost():
    tree, epi = two_level([0.5, 0.5], [0.2, 0.2], [100, 100], [10, 10])
    prof = ActionProfile(((0.5,), (0.3, 1.0)))
    assert implementation_cost(PlayerId(2, 0), prof, tree) == pytest.approx(0.7)
    assert implementation_cost(PlayerId(2, 1), prof, tree) == 0.0


def test_parent_implementation_cost_is_average():
    tree, epi = two_level([0.5, 0.5], [0.2, 0.2], [100, 100], [10, 10])
    prof = ActionProfile(((0.5,), (0.2, 0.6)))
    assert implementation_cost(PlayerId(1, 0), prof, tree) == pytest.approx(0.6)


@pytest.mark.parametrize(
    "mode,alpha,parent,expected",
    [
        ("one-sided", 0.3, 0.5, 0.0),
        ("two-sided", 0.3, 0.5, 0.04),
        ("one-sided", 0.5, 0.5, 0.0),
        ("two-sided", 0.5, 0.5, 0.0),
        ("one-sided", 0.9, 0.5, 0.16),
    ],
)
def test_noncompliance_examples(mode, alpha, parent, expected):
    assert noncompliance_cost(alpha, parent, mode) == pytest.approx(expected)


@given(unit, unit)
def test_one_sided_never_exceeds_two_sided(a, b):
    one = noncompliance_cost(a, b, ComplianceMode.ONE_SIDED)
    two = noncompliance_cost(a, b, ComplianceMode.TWO_SIDED)
    assert one <= two
    assert (one == two) == (a >= b or a == b)


def test_impact_cost_symmetric_counties(paper_counties):
    tree, _ = two_level([0.5] * 4, [0.5] * 4, [250] * 4, [125] * 4)
    prof = ActionProfile(((1.0,), (1.0,) * 4))
    c = impact_cost(PlayerId(2, 0), prof, tree, paper_counties)
    assert c == pytest.approx(37.506 / 250, abs=1e-4)


def test_zero_activity_means_zero_impact(paper_counties):
    tree, _ = two_level([0.5] * 4, [0.5] * 4, [250] * 4, [125] * 4)
    prof = ActionProfile(((0.0,), (0.0,) * 4))
    bd = evaluate_costs(prof, tree, paper_counties, "two-sided")
    assert all(np.all(lv == 0) for lv in bd.impact)


def test_overall_cost_worked_state():
    tree, epi = two_level([0.0, 0.0], [0.6, 0.6], [500, 500], [50, 50])
    prof = ActionProfile(((0.5,), (1.0, 1.0)))
    assert overall_cost(PlayerId(2, 0), prof, tree, epi, "two-sided") == pytest.approx(0.1)


def test_root_cost_is_midpoint():
    tree, epi = two_level([0.5, 0.5], [0.2, 0.2], [100, 100], [10, 10], root_kappa=0.5)
    prof = ActionProfile(((0.3,), (0.6, 0.2)))
    bd = evaluate_costs(prof, tree, epi, "two-sided")
    expected = 0.5 * bd.impact[0][0] + 0.5 * bd.implementation[0][0]
    assert bd.overall[0][0] == pytest.approx(expected, abs=1e-15)


def test_full_noncompliance_weight_one_sided_is_free():
    tree, epi = two_level([0.0], [0.0], [100], [10])
    for a in (0.0, 0.3, 0.6):
        prof = ActionProfile(((0.6,), (a,)))
        assert overall_cost(PlayerId(2, 0), prof, tree, epi, "one-sided") == 0.0


def test_social_cost_examples():
    tree, epi = two_level([0.0], [1.0], [100], [10])
    prof = ActionProfile(((0.5,), (0.3,)))
    assert social_cost(PlayerId(1, 0), prof, tree, epi, "two-sided") == pytest.approx(
        overall_cost(PlayerId(2, 0), prof, tree, epi, "two-sided")
    )
    # shares 0.75 / 0.25, pure implementation weight: costs 0.4 and 0.0
    tree, epi = two_level([0.0, 0.0], [1.0, 1.0], [300, 100], [0, 0])
    prof = ActionProfile(((0.5,), (0.6, 1.0)))
    assert social_cost(PlayerId(1, 0), prof, tree, epi, "two-sided") == pytest.approx(0.3)
    with pytest.raises(ValueError):
        social_cost(PlayerId(2, 0), prof, tree, epi, "two-sided")


def test_partial_profile_is_rejected():
    tree, epi = two_level([0.5], [0.2], [100], [10])
    with pytest.raises(ProfileError):
        overall_cost(PlayerId(1, 0), ActionProfile(((0.5,),)), tree, epi, "two-sided")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_costs_in_unit_interval(seed):
    tree, epi, prof = random_three_level(np.random.default_rng(seed))
    for mode in ComplianceMode:
        bd = evaluate_costs(prof, tree, epi, mode)
        for comp in (bd.impact, bd.implementation, bd.noncompliance, bd.overall):
            for lv in comp:
                assert np.all(lv >= 0) and np.all(lv <= 1 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_aggregation_consistency(seed):
    tree, epi, prof = random_three_level(np.random.default_rng(seed))
    bd = evaluate_costs(prof, tree, epi, "two-sided")
    for l in (1, 2):
        for i in range(tree.size(l)):
            pid = PlayerId(l, i)
            kids = tree.children(pid)
            mu = tree.node(pid).share
            for comp in (bd.impact, bd.implementation):
                avg = sum(tree.node(k).share * comp[l][k.index] for k in kids) / mu
                assert abs(comp[l - 1][i] - avg) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), unit)
def test_root_cost_ignores_root_action(seed, root_alpha):
    tree, epi, prof = random_three_level(np.random.default_rng(seed))
    moved = prof.replace(PlayerId(1, 0), root_alpha)
    root = PlayerId(1, 0)
    assert overall_cost(root, prof, tree, epi, "two-sided") == overall_cost(root, moved, tree, epi, "two-sided")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_leaf_monotonicity_in_own_action(seed):
    rng = np.random.default_rng(seed)
    tree, epi, prof = random_three_level(rng)
    grid = np.linspace(0, 1, 21)
    for leaf in range(tree.size(3)):
        pid = PlayerId(3, leaf)
        dec = [implementation_cost(pid, prof.replace(pid, a), tree) for a in grid]
        inc = [impact_cost(pid, prof.replace(pid, a), tree, epi) for a in grid]
        assert np.all(np.diff(dec) < 0)
        assert np.all(np.diff(inc) >= -1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.99))
def test_impact_monotone_in_other_leaves_at_equal_rates(seed, rate):
    rng = np.random.default_rng(seed)
    n = 4
    r = random_column_stochastic(rng, n)
    tree, epi = two_level([0.5] * n, [0.5] * n, [200] * n, [200 * rate] * n, transport=r)
    alpha = rng.uniform(0, 1, n)
    for other in range(1, n):
        vals = []
        for a in np.linspace(0, 1, 11):
            trial = alpha.copy()
            trial[other] = a
            vals.append(impact_cost(PlayerId(2, 0), ActionProfile(((0.5,), tuple(trial))), tree, epi))
        assert np.all(np.diff(vals) >= -1e-15)


def test_impact_can_fall_when_a_clean_neighbour_opens():
    # a county with no infections dilutes the infected fraction seen by others
    tree, epi = two_level([0.5, 0.5], [0.5, 0.5], [100, 100], [50, 0])
    low = impact_cost(PlayerId(2, 0), ActionProfile(((0.5,), (1.0, 0.0))), tree, epi)
    high = impact_cost(PlayerId(2, 0), ActionProfile(((0.5,), (1.0, 1.0))), tree, epi)
    assert high < low
