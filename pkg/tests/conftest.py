import numpy as np
import pytest

from epsode import (PlanarRegion, builtin_system, flow_omega_dense)


@pytest.fixture(scope="session")
def e1():
    return builtin_system("e1-circle")


@pytest.fixture(scope="session")
def e2():
    return builtin_system("e2-resonance")


@pytest.fixture(scope="session")
def e3():
    return builtin_system("e3-scalar")


@pytest.fixture(scope="session")
def disk():
    return PlanarRegion.circle(0.0, 0.0, 1.0, 512)


@pytest.fixture(scope="session")
def e1_cycle(e1):
    cycle = flow_omega_dense(e1, 0.0, e1.T, [1.0, 0.0])
    assert np.linalg.norm(cycle.endpoint - np.array([1.0, 0.0])) < 1e-8
    return cycle
