import numpy as np
import pytest

from osl.grid import CubeFamily, build_euclidean_grids, uniform_grid


@pytest.fixture(scope="session")
def grid64():
    systems = build_euclidean_grids(64, 6, n_shifts=1)
    return systems[0]


@pytest.fixture(scope="session")
def grid256_family():
    systems = build_euclidean_grids(256, 8, n_shifts=1)
    return CubeFamily(systems[0].space, systems)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def cube_lists(family):
    """Member index lists of every cube, as plain Python lists (oracle input)."""
    return [list(map(int, m)) for m in family.members]
