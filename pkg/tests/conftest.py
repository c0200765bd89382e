"""Shared fixtures: small grids, the standard symbols, seeded RNG."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dklb import grid as grid_mod
from dklb import symbols

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture
def grid128():
    return grid_mod.SpectralGrid(128, 40.0)


@pytest.fixture
def grid256():
    return grid_mod.SpectralGrid(256, 40.0)


@pytest.fixture
def grid512():
    return grid_mod.SpectralGrid(512, 40.0)


@pytest.fixture
def kdvks_phi():
    return symbols.kdvks(eta=1.0).phase


@pytest.fixture
def kdvb_phi():
    return symbols.kdvb(eta=1.0).phase


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_real_field(grid256, rng):
    vals = rng.standard_normal(grid256.n)
    return grid_mod.from_values(grid256, vals)
