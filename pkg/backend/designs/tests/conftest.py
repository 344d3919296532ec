import numpy as np
import pytest

from backend.designs.contrasts import controls_contrasts
from backend.designs.core import Design
from backend.designs.criteria import Criterion
from backend.designs.nuisance import build_blocktrend, build_exponential_trend

# Treatment rows u1..u5 over times t1..t8, printed to four decimals.
EXPONENTIAL_TABLE = [
    [0, .1250, .0560, 0, 0, 0, 0, .0437],
    [0, 0, .0690, 0, 0, .1250, .0059, .0249],
    [.0245, 0, 0, .1250, 0, 0, 0, .0340],
    [.0154, 0, 0, 0, .1250, 0, .0207, .0224],
    [.0851, 0, 0, 0, 0, 0, .0984, 0],
]

# Per block: treatment rows u1..u3 over positions 1..8.
BLOCKTREND_TABLE = [
    [[.0417, 0, .0417, 0, .0417, 0, .0417, 0],
     [0, .0417, 0, 0, 0, .0417, 0, 0],
     [0, 0, 0, .0417, 0, 0, 0, .0417]],
    [[.0417, .0417, 0, .0324, 0, .0417, .0093, 0],
     [0, 0, 0, 0, .0417, 0, 0, .0417],
     [0, 0, .0417, .0093, 0, 0, .0324, 0]],
    [[.0046, 0, .0083, 0, .0417, .0417, .0370, .0333],
     [0, .0417, .0333, 0, 0, 0, 0, .0083],
     [.0370, 0, 0, .0417, 0, 0, .0046, 0]],
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def a_criterion():
    return Criterion.parse('A')


@pytest.fixture
def two_controls():
    return controls_contrasts(5, 2)


@pytest.fixture
def exponential_space():
    return build_exponential_trend(8).space(5)


@pytest.fixture
def exponential_table_design(exponential_space):
    return Design.from_dense(exponential_space, np.array(EXPONENTIAL_TABLE), normalize=True)


@pytest.fixture
def blocktrend_space():
    return build_blocktrend(3, 8, 2).space(3)


@pytest.fixture
def blocktrend_table_design(blocktrend_space):
    x = np.hstack([np.array(block) for block in BLOCKTREND_TABLE])
    return Design.from_dense(blocktrend_space, x, normalize=True)
