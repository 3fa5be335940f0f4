import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rbl.bench import default_conformation

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def cube():
    return default_conformation()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
