import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fdmkit import fixtures


@pytest.fixture(scope="session")
def standard_problems():
    return fixtures.standard_fixtures()


@pytest.fixture(scope="session")
def small_problems():
    return fixtures.small_fixtures()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))
