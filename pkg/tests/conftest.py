import numpy as np
import pytest

from riskalloc import GridSpec, PointPattern, RectWindow


@pytest.fixture
def unit_square():
    return RectWindow(0.0, 0.0, 1.0, 1.0)


@pytest.fixture
def unit_grid(unit_square):
    return GridSpec.for_window(unit_square, 256, 256)


def uniform_pattern(n: int, seed: int, lo: float = 0.02, hi: float = 0.98) -> PointPattern:
    rng = np.random.default_rng(seed)
    return PointPattern(rng.uniform(lo, hi, (n, 2)))
