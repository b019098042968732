import numpy as np
import pytest

from src.core.logging_setup import configure_logging
from tests.helpers import two_state


@pytest.fixture(autouse=True)
def _logging():
    # capsys の差し替えた stderr を後続のテストに残さない
    configure_logging('WARNING')
    yield
    configure_logging('WARNING')


@pytest.fixture
def fixture_chain():
    """a = 0.3, b = 0.5 の 2 状態連鎖"""
    return two_state(0.3, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
