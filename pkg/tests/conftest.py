import numpy as np
import pytest

from slfib import BoundarySpec, DomainSpec, solve_disc, solve_strip


@pytest.fixture(scope="session")
def disc_field_alpha1():
    """Cubic-harmonic disc field at a = 1, shared across test modules."""
    spec = BoundarySpec.make(cos={1: 1.0, 3: -1.0})
    return solve_disc(spec, 1.0, DomainSpec.disc(48, 96))


@pytest.fixture(scope="session")
def strip_field_cos():
    """Strip field with edge data 1 + 0.5 cos x at a = 0.5."""
    top = BoundarySpec.make(constant=1.0, cos={1: 0.5})
    return solve_strip(top, top, 0.5, DomainSpec.strip(96, 49))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
