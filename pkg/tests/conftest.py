import pytest

from hamgeo import HamiltonianSpec, PhasePoint


@pytest.fixture(scope="session")
def worked_ham():
    """The quadratic benchmark Hamiltonian used throughout the tests.

    H = (p1^2 + (p1*x1 + p2)^2) / 2 on a 2-dimensional base; it is regular
    everywhere and every geometric quantity has a short closed form.
    """
    return HamiltonianSpec.from_text("benchmark", 2, "0.5*(p1^2+(p1*x1+p2)^2)")


@pytest.fixture(scope="session")
def free_ham():
    return HamiltonianSpec.from_text("free-particle", 2, "0.5*(p1^2+p2^2)")


@pytest.fixture(scope="session")
def base_point():
    """Reference point with hand-checked values for every operation."""
    return PhasePoint(x=(1.0, 0.0), p=(1.0, 1.0))
