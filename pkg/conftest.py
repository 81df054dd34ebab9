"""
Shared fixtures: the disk phantom, its edge point, the default kernel and a
coarse sampling grid (eps = 0.02, 50 views x 101 detector bins) next to
the baseline one (eps = 0.007) for the slow tests.
"""

import numpy as np
import pytest

from sma.kernel import make_kernel
from sma.phantom import Disk, Phantom, boundary_point
from sma.sampling import NoiseModel, NoisyData, SamplingGrid, SigmaProfile, draw_noise, sample_radon

COARSE_EPSILON = 0.02
BASELINE_EPSILON = 0.007


@pytest.fixture(scope="session")
def kernel():
    return make_kernel("bspline4")


@pytest.fixture(scope="session")
def coarse_grid():
    return SamplingGrid.create(COARSE_EPSILON, 2 * np.pi)


@pytest.fixture(scope="session")
def baseline_grid():
    return SamplingGrid.create(BASELINE_EPSILON, 2 * np.pi)


@pytest.fixture(scope="session")
def disk_phantom():
    return Phantom((Disk(0.0, -0.1, 0.345, 1.0),), 1.0)


@pytest.fixture(scope="session")
def edge(disk_phantom):
    return boundary_point(disk_phantom, 0, 0.0)


@pytest.fixture(scope="session")
def unit_noise():
    return NoiseModel("uniform", SigmaProfile("constant", 1.0))


@pytest.fixture(scope="session")
def clean_sinogram(disk_phantom, coarse_grid):
    return sample_radon(disk_phantom, coarse_grid)


@pytest.fixture(scope="session")
def noisy_data(clean_sinogram, coarse_grid, unit_noise):
    return NoisyData(clean_sinogram, draw_noise(coarse_grid, unit_noise.scaled(np.sqrt(3.0)), seed=0))


@pytest.fixture
def rng():
    """Fixed RNG for synthetic inputs"""
    return np.random.default_rng(42)
