import math

import numpy as np
import pytest

from tsunami_blowup.experiments import initial_data
from tsunami_blowup.grid_spectral import Field, PeriodicGrid
from tsunami_blowup.model import ModelParams

# Box that holds the 4*pi-periodic wave profile of the example data
EXAMPLE_L = 4 * math.pi


@pytest.fixture
def grid():
    return PeriodicGrid(10.0, 1024)


@pytest.fixture
def example_grid():
    return PeriodicGrid(EXAMPLE_L, 1024)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def example1(example_grid):
    return initial_data('example1', example_grid)


def flat_params(grid, beta=1.0, g=1.0):
    return ModelParams.flat(grid, beta=beta, g=g)


def band_limited(grid, rng, k_limit, amplitude=1.0):
    """Random real field with modes |k| <= k_limit."""
    k = grid.rfft_wavenumbers
    coeffs = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * (k <= k_limit)
    coeffs[0] = coeffs[0].real
    samples = np.fft.irfft(coeffs, n=grid.n_points)
    samples *= amplitude / np.max(np.abs(samples))
    return Field(grid, samples)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
