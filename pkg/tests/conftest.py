import os

import pytest
from hypothesis import HealthCheck, settings

from tbent.config import ExperimentConfig

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def defaults():
    return ExperimentConfig()


@pytest.fixture
def noiseless():
    return ExperimentConfig().noiseless()
