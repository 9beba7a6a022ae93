import numpy as np
import pytest

from nlcsim.littlewood_paley import build_cutoff_bank
from nlcsim.spectral import Grid


@pytest.fixture(scope="session")
def grid2_16():
    return Grid(2, 16)


@pytest.fixture(scope="session")
def grid2_32():
    return Grid(2, 32)


@pytest.fixture(scope="session")
def grid2_64():
    return Grid(2, 64)


@pytest.fixture(scope="session")
def grid3_16():
    return Grid(3, 16)


@pytest.fixture(scope="session")
def grid3_32():
    return Grid(3, 32)


@pytest.fixture(scope="session")
def bank2_32(grid2_32):
    return build_cutoff_bank(grid2_32)


@pytest.fixture(scope="session")
def bank2_64(grid2_64):
    return build_cutoff_bank(grid2_64)


@pytest.fixture(scope="session")
def bank3_16(grid3_16):
    return build_cutoff_bank(grid3_16)


def lattice_magnitudes(grid):
    return np.unique(grid.k_mag[grid.k_mag > 0])
