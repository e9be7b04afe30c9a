import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_states(rng, n, p, scale=1.0):
    """Distinct random states (continuous draws never collide)."""
    return scale * rng.standard_normal((n, p))
