import numpy as np
import pytest

from fragchain.chain import ChainSpec, ProductState
from fragchain.units import from_mhz


@pytest.fixture
def spec13():
    """The 13-atom open chain of the k=2 constrained experiments."""
    return ChainSpec.from_v1(13, 3.73, from_mhz(5.0), "open", kmax=3)


@pytest.fixture
def z4_13():
    return ProductState.from_sites(13, (1, 5, 9, 13))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_state_vector(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)
