import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nsclab.model import ModelSpec
from nsclab.spectral import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def grid2d():
    return Grid(d=2, n=32)


@pytest.fixture
def grid1d():
    return Grid(d=1, n=64)


@pytest.fixture
def nsc3():
    return ModelSpec(kind="nsc", d=3, eps=0.1)


@pytest.fixture
def nsc2():
    return ModelSpec(kind="nsc", d=2, eps=0.1)
