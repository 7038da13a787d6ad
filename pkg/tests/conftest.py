from __future__ import annotations

import numpy as np
import pytest

from hpmg import EpidemicParams, build_hierarchy, make_transport_matrix
from hpmg.infection import TransportMatrix

from acceptance_log import ACCEPTANCE_LINES


def two_level(kappas, etas, pops, infected, root_kappa=0.5, transport=None):
    """Government over leaf states; symmetric transport unless a matrix is given."""
    spec = {
        "levels": [
            [{"kappa": root_kappa}],
            [
                {"parent": 0, "kappa": k, "eta": e, "population": n, "infected": i}
                for k, e, n, i in zip(kappas, etas, pops, infected)
            ],
        ]
    }
    tree = build_hierarchy(spec)
    r = make_transport_matrix("symmetric", len(pops)) if transport is None else TransportMatrix(transport)
    return tree, EpidemicParams.from_tree(tree, r)


def three_level(state_weights, county_specs, root_kappa=0.5, transport=None):
    """``county_specs``: (parent, kappa, eta, population, infected) tuples."""
    spec = {
        "levels": [
            [{"kappa": root_kappa}],
            [{"parent": 0, "kappa": k, "eta": e} for k, e in state_weights],
            [
                {"parent": p, "kappa": k, "eta": e, "population": n, "infected": i}
                for p, k, e, n, i in county_specs
            ],
        ]
    }
    tree = build_hierarchy(spec)
    n = len(county_specs)
    r = make_transport_matrix("symmetric", n) if transport is None else TransportMatrix(transport)
    return tree, EpidemicParams.from_tree(tree, r)


@pytest.fixture
def sec22_game():
    """Two equal states with kappa 0, eta 0.6 under a kappa-0.5 government."""
    return two_level([0.0, 0.0], [0.6, 0.6], [500, 500], [50, 50])


@pytest.fixture
def paper_counties():
    """Four counties of 250, half infected, uniform transport."""
    r = make_transport_matrix("symmetric", 4)
    return EpidemicParams(r, [250.0] * 4, [125.0] * 4)


def random_column_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.dirichlet(np.ones(n), size=n).T
    return m / m.sum(axis=0, keepdims=True)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
