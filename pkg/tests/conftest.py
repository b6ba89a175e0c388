import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from curvlab.metric import ConformalMetric, cone, flat

settings.register_profile(
    "curvlab",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("curvlab")


@pytest.fixture(scope="session")
def cone03():
    return cone(0.3)


@pytest.fixture(scope="session")
def flat_metric():
    return flat()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)


def probe_cone(beta, center=(0.0, 0.0)):
    return ConformalMetric.probe(atoms=((center, beta),))
