import pytest

from halodiff.kernels import BeamState, GratingGeometry
from halodiff.wavefunction import helium_dimer


@pytest.fixture(scope="session")
def he2():
    return helium_dimer()


@pytest.fixture(scope="session")
def beam(he2):
    return BeamState.from_speed(he2.total_mass, 1000.0)


def half_open(d, N=30):
    return GratingGeometry(d, d / 2, N)
