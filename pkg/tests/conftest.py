import pytest
from hypothesis import settings

from helpers import device_params

settings.register_profile("suite", max_examples=50, deadline=None,
                          derandomize=True)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def params():
    return device_params()
