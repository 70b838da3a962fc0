import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from drlfolio.synthetic import drift_market


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def small_market():
    """Three risky assets (one drifting up 1%/day, two flat), 400 days."""
    return drift_market(400, [0.01, 0.0, 0.0], sigma=0.0, seed=7)


@pytest.fixture
def noisy_market():
    return drift_market(400, [0.002, -0.001, 0.0005, 0.0], sigma=0.01, seed=11)


def random_weights(gen, m):
    """Random valid signed weight vector over cash + m risky assets."""
    raw = gen.uniform(-1.0, 1.0, size=m + 1)
    raw[0] = abs(raw[0])
    total = np.abs(raw).sum()
    if total == 0.0:
        raw[0] = 1.0
        total = 1.0
    return raw / total
