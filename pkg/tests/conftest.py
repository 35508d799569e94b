import pytest

from twinslit.config import IntegratorSettings, PhysicalConfig
from twinslit.state import EffectiveState


@pytest.fixture(scope="session")
def cfg():
    return PhysicalConfig()


@pytest.fixture(scope="session")
def state(cfg):
    return EffectiveState(cfg)


@pytest.fixture(scope="session")
def settings():
    return IntegratorSettings()
