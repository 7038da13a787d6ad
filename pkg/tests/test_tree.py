import numpy as np
import pytest

from hpmg import ActionProfile, ComplianceMode, PartialProfile, PlayerId, WeightVector, build_hierarchy
from hpmg.tree import HierarchyError, ProfileError, require_complete

from conftest import three_level


def fig1_spec():
    return {
        "levels": [
            [{"name": "government", "kappa": 0.5}],
            [{"parent": 0, "kappa": 0.5, "eta": 0.3}, {"parent": 0, "kappa": 0.5, "eta": 0.3}],
            [
                {"parent": 0, "kappa": 0.4, "eta": 0.4, "population": 100, "infected": 10},
                {"parent": 0, "kappa": 0.4, "eta": 0.4, "population": 300, "infected": 10},
                {"parent": 1, "kappa": 0.4, "eta": 0.4, "population": 200, "infected": 10},
                {"parent": 1, "kappa": 0.4, "eta": 0.4, "population": 400, "infected": 10},
            ],
        ]
    }


def test_three_level_topology():
    tree = build_hierarchy(fig1_spec())
    assert tree.sizes == (1, 2, 4)
    assert tree.n_levels == 3
    assert tree.root.name == "government"
    assert tree.children(PlayerId(2, 1)) == [PlayerId(3, 2), PlayerId(3, 3)]
    assert tree.parent(PlayerId(3, 2)) == PlayerId(2, 1)
    assert tree.parent(PlayerId(1, 0)) is None


def test_shares_from_populations_and_bottom_up():
    tree = build_hierarchy(fig1_spec())
    np.testing.assert_allclose(tree.share_arrays[2], [0.1, 0.3, 0.2, 0.4])
    np.testing.assert_allclose(tree.share_arrays[1], [0.4, 0.6])
    assert tree.root.share == pytest.approx(1.0)


def test_explicit_shares_taken_verbatim():
    spec = fig1_spec()
    for row, s in zip(spec["levels"][2], [0.25] * 4):
        del row["population"], row["infected"]
        row["share"] = s
    tree = build_hierarchy(spec)
    np.testing.assert_allclose(tree.share_arrays[1], [0.5, 0.5])


def test_leaf_shares_not_summing_to_one():
    spec = fig1_spec()
    for row, s in zip(spec["levels"][2], [0.2, 0.2, 0.2, 0.3]):
        del row["population"], row["infected"]
        row["share"] = s
    with pytest.raises(HierarchyError, match="sum to 1"):
        build_hierarchy(spec)


def test_inconsistent_share_and_population_rejected():
    spec = fig1_spec()
    spec["levels"][2][0]["share"] = 0.2
    with pytest.raises(HierarchyError, match="inconsistent"):
        build_hierarchy(spec)


def test_weights_over_one_rejected():
    spec = fig1_spec()
    spec["levels"][1][0].update(kappa=0.7, eta=0.5)
    with pytest.raises(HierarchyError):
        build_hierarchy(spec)
    with pytest.raises(HierarchyError):
        WeightVector(0.7, 0.5)


def test_orphan_and_single_level_rejected():
    spec = fig1_spec()
    spec["levels"][2][3]["parent"] = 5
    with pytest.raises(HierarchyError, match="orphan"):
        build_hierarchy(spec)
    with pytest.raises(HierarchyError, match="L > 1"):
        build_hierarchy({"levels": [[{"kappa": 0.5}]]})


def test_childless_inner_node_rejected():
    spec = fig1_spec()
    spec["levels"][1].append({"parent": 0, "kappa": 0.1, "eta": 0.1})
    with pytest.raises(HierarchyError):
        build_hierarchy(spec)


def test_infected_above_population_rejected():
    spec = fig1_spec()
    spec["levels"][2][0]["infected"] = 101
    with pytest.raises(HierarchyError):
        build_hierarchy(spec)


def test_weight_vector_gamma():
    w = WeightVector(0.2, 0.3)
    assert w.gamma == pytest.approx(0.5)
    assert WeightVector.root(0.3).gamma == pytest.approx(0.0)


def test_spec_round_trip():
    tree = build_hierarchy(fig1_spec())
    again = build_hierarchy(tree.to_spec())
    assert again == tree


def test_compliance_mode_parse():
    assert ComplianceMode.parse("one-sided") is ComplianceMode.ONE_SIDED
    assert ComplianceMode.parse(ComplianceMode.TWO_SIDED) is ComplianceMode.TWO_SIDED
    with pytest.raises(ValueError):
        ComplianceMode.parse("sideways")


def test_profiles():
    tree, _ = three_level([(0.5, 0.3)] * 2, [(0, 0.5, 0.5, 100, 10), (1, 0.5, 0.5, 100, 10)])
    part = PartialProfile(((0.5,),))
    assert part.depth == 1
    full = part.extend((0.2, 0.4)).extend((1.0, 0.0)).complete()
    assert full[PlayerId(2, 1)] == 0.4
    assert full.restrict(2).depth == 2
    assert full.replace(PlayerId(3, 0), 0.3)[PlayerId(3, 0)] == 0.3
    require_complete(full, tree)
    with pytest.raises(ProfileError):
        require_complete(full.restrict(2), tree)
    with pytest.raises(ValueError):
        ActionProfile(((1.5,), (0.0, 0.0), (0.0, 0.0)))
