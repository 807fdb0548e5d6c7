import os

import pytest
from hypothesis import HealthCheck, settings

from mfinvariants.dirac import DiracModule
from mfinvariants.lg import build_model
from mfinvariants.toric import simplex

settings.register_profile(
    "repro", derandomize=True, deadline=None, print_blob=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repro"))


@pytest.fixture(scope="session")
def model1():
    return build_model(simplex(1))


@pytest.fixture(scope="session")
def model3():
    return build_model(simplex(3))


@pytest.fixture(scope="session")
def module1(model1):
    return DiracModule(model1)


@pytest.fixture(scope="session")
def module3(model3):
    return DiracModule(model3)
