import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mechsqueeze.model import OPTIMAL_PUMPS, BathState, reference_device

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def device():
    return reference_device()


@pytest.fixture
def pumps():
    return OPTIMAL_PUMPS


@pytest.fixture
def baths():
    return BathState(n_m_th=50.0, n_c_th=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
