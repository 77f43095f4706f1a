import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Property suites run with at least 1000 cases each.
settings.register_profile(
    "default",
    max_examples=1000,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
