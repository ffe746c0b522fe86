"""Shared fixtures for the renewal-ld test suite."""

import os

import hypothesis
import numpy as np
import pytest

from renewal_ld.engine.distributions import InverseRayleigh, LogNormal, Pareto
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.occupation import occupation_table

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "ci"))

ALL_FAMILIES = [Pareto(3.0), Pareto(3.5), InverseRayleigh(1.0), LogNormal(0.0, 1.5)]


@pytest.fixture(params=ALL_FAMILIES, ids=lambda d: d.label)
def any_dist(request):
    return request.param


@pytest.fixture
def pareto3():
    return Pareto(3.0)


@pytest.fixture(scope="session")
def fine_grid() -> TimeGrid:
    """Logarithmic grid through the times the acceptance values are quoted at."""
    return TimeGrid.logarithmic(1e-2, 1e3, 120, extra=(1.0, 9.0, 10.0, 50.0, 100.0))


@pytest.fixture(scope="session")
def pareto3_table(fine_grid):
    """Quadrature occupation table for Pareto(3), rows 0..24."""
    return occupation_table(Pareto(3.0), fine_grid, 24)


@pytest.fixture
def rng():
    return np.random.default_rng(20240101)
