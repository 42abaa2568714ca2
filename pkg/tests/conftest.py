import numpy as np
import pytest

from dualtraj import registry


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def small_spec(name, n=40, **params):
    """Registry system on a short grid so random-field tests stay fast."""
    p = dict(params)
    p["n"] = n
    return registry(name, p)


@pytest.fixture(params=["logistic", "memristor", "lorenz"])
def each_system(request):
    return small_spec(request.param)
