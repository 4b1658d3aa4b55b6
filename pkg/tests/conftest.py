"""Shared fixtures: small hand-checkable instances used across the suite."""

import numpy as np
import pytest

from prefelicit.belief import ParticleBelief, ResponseModel
from prefelicit.catalog import Catalog


@pytest.fixture
def axis_belief():
    """Two orthogonal unit particles with uniform weights."""
    return ParticleBelief(
        particles=np.array([[1.0, 0.0], [0.0, 1.0]]),
        weights=np.array([0.5, 0.5]),
    )


@pytest.fixture
def axis_catalog():
    """Three items: two axis-aligned at norm 2 plus a diagonal."""
    return Catalog(
        items=np.array([[2.0, 0.0], [0.0, 2.0], [1.0, 1.0]]),
        ids=("x", "y", "diag"),
    )


@pytest.fixture
def axis_slate_vectors():
    return np.array([[1.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def noiseless():
    return ResponseModel(kind="noiseless")


@pytest.fixture
def logistic_unit():
    return ResponseModel(kind="logistic", temperature=1.0)


def random_instance(rng, n, m, d, k=2):
    """A random catalog/belief pair with normalized random weights."""
    from prefelicit.catalog import Catalog

    items = rng.standard_normal((n, d))
    particles = rng.standard_normal((m, d))
    w = rng.random(m) + 0.05
    w /= w.sum()
    catalog = Catalog(items=items, ids=tuple(f"i{j}" for j in range(n)))
    belief = ParticleBelief(particles=particles, weights=w)
    return catalog, belief
