import numpy as np
import pytest

from rotopat.acoustics import SoundSpeedMap
from rotopat.geometry import AcquisitionSetup, BoundaryParametrization, Grid, build_mask


@pytest.fixture
def grid():
    return Grid.from_cells(1.0, 0.25, 32)


@pytest.fixture
def fine_grid():
    return Grid.from_spacing(1.0, 0.25, 1 / 32)


@pytest.fixture
def mask(grid):
    return build_mask(grid, 0.35)


@pytest.fixture
def c(grid):
    return SoundSpeedMap.constant(grid)


@pytest.fixture
def boundary(grid):
    return BoundaryParametrization.for_grid(grid)


@pytest.fixture
def setup():
    return AcquisitionSetup.default(1.0, m=2)


@pytest.fixture
def rng():
    return np.random.default_rng(7)
