import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from haplomw import FitnessLandscape, JointDistribution

TABLE_W_ROWS = [[1.0, 0.5], [1.5, 1.2], [1.3, 0.8]]
TABLE_P0_ROWS = [[0.1, 0.15], [0.1, 0.15], [0.2, 0.3]]


@pytest.fixture
def table_w():
    return FitnessLandscape(TABLE_W_ROWS)


@pytest.fixture
def table_p0():
    return JointDistribution(TABLE_P0_ROWS)


def random_joint(counts, rng):
    raw = rng.uniform(size=tuple(counts))
    return JointDistribution(raw / raw.sum())


def random_product(counts, rng):
    vectors = []
    for n in counts:
        v = rng.uniform(size=n)
        vectors.append(v / v.sum())
    return JointDistribution.from_product(vectors)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
