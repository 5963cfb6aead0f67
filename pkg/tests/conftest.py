import numpy as np
import pytest

from commutator_lab.dyadic import build_dyadic_system
from commutator_lab.haar import build_haar
from commutator_lab.space import FiniteSpace, cantor_space, euclidean_grid


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240819)


def binary_stack(depth: int):
    """1D grid of 2**depth points on [0,1] with its binary dyadic system."""
    n = 2**depth
    space = euclidean_grid(1, n, 1.0 / n)
    system = build_dyadic_system(space, 0.5)
    basis = build_haar(system)
    return space, system, basis


def cantor_stack(depth: int, branching: int = 2, delta: float = 1 / 3):
    space = cantor_space(branching, delta, depth)
    system = build_dyadic_system(space, delta)
    basis = build_haar(system)
    return space, system, basis


@pytest.fixture(scope="session")
def binary5():
    return binary_stack(5)


@pytest.fixture(scope="session")
def binary6():
    return binary_stack(6)


@pytest.fixture(scope="session")
def cantor4():
    return cantor_stack(4)


@pytest.fixture(scope="session")
def two_point():
    space = FiniteSpace(np.array([[0.0, 1.0], [1.0, 0.0]]),
                        np.array([0.5, 0.5]), 1.0, np.array([[0.25], [1.25]]))
    return space
