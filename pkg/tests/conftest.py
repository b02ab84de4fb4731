import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "deterministic", deadline=None, derandomize=True, max_examples=25,
    suppress_health_check=list(HealthCheck))
settings.load_profile("deterministic")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
