import functools

import pytest

from glvortex.discretize import build_mesh
from glvortex.equilibria import solve_all
from glvortex.geometry import make_disk, make_sphere


@pytest.fixture(scope="session")
def sphere():
    return make_sphere()


@pytest.fixture(scope="session")
def disk():
    return make_disk()


@functools.lru_cache(maxsize=None)
def sphere_equilibria(lam, n=2048):
    s = make_sphere()
    return tuple(solve_all(s, 1, lam, nodes=build_mesh(s, n)))


@pytest.fixture(scope="session")
def eq_sphere():
    return sphere_equilibria
