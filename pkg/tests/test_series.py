import math

import numpy as np
import pytest

from renewal_ld.engine.bounds import estimate_constants, thm2_bound
from renewal_ld.engine.distributions import Pareto
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.occupation import occupation_table
from renewal_ld.engine.series import (
    _sum_k,
    _sum_k2,
    mgf_direct,
    mgf_series,
    mgf_series_values,
    mgf_table,
    remainder_bound,
    required_k_max,
    thm1_limit,
)
from renewal_ld.errors import TruncationError


def test_limit_constant():
    assert thm1_limit(-1.0) == pytest.approx(1.58198, rel=1e-5)
    with pytest.raises(ValueError):
        thm1_limit(0.0)


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_series_and_direct_sum_differ_by_the_truncated_mass(pareto3_table, t):
    h = -0.5
    z = math.exp(h)
    i = pareto3_table.grid.index_of(t)
    mass = float(np.sum(pareto3_table.values[:, i]))
    series = mgf_series(pareto3_table, h, t).value
    direct = mgf_direct(pareto3_table, h, t)
    assert series + z ** (pareto3_table.k_max + 1) * mass == pytest.approx(direct, abs=1e-12)


def test_h_zero_is_exactly_one(pareto3_table):
    result = mgf_series(pareto3_table, 0.0, 10.0)
    assert result.value == 1.0
    assert result.truncation_bound == 0.0


@pytest.mark.parametrize("h", [0.1, math.inf, math.nan])
def test_positive_or_non_finite_h_rejected(pareto3_table, h):
    with pytest.raises(ValueError):
        mgf_series(pareto3_table, h, 10.0)


def test_off_grid_time_rejected(pareto3_table):
    with pytest.raises(ValueError, match="not on the time grid"):
        mgf_series(pareto3_table, -1.0, 11.0)


def test_series_at_origin_plus_remainder_is_one(pareto3_table):
    values, bounds = mgf_series_values(pareto3_table, -1.0)
    assert values[0] + bounds[0] == pytest.approx(1.0, abs=1e-15)


def test_series_lies_between_bounds(pareto3_table):
    values, bounds = mgf_series_values(pareto3_table, -1.0)
    assert np.all(values > 0.0)
    assert np.all(values <= 1.0 + 1e-9)
    assert np.all(bounds == pytest.approx(math.exp(-1.0) ** (pareto3_table.k_max + 1)))


def test_series_is_decreasing_in_t(pareto3_table):
    values, _ = mgf_series_values(pareto3_table, -2.0)
    assert np.all(np.diff(values) <= 1e-6)


@pytest.mark.parametrize(("x", "k0"), [(0.3, 1), (0.9, 7), (0.5, 40)])
def test_closed_form_power_sums(x, k0):
    k = np.arange(k0, k0 + 4000)
    assert _sum_k(x, k0) == pytest.approx(math.fsum(k * x**k), rel=1e-12)
    assert _sum_k2(x, k0) == pytest.approx(math.fsum(k * k * x**k), rel=1e-12)


def test_remainder_bound_with_constants_is_sharper_at_large_t():
    bc = estimate_constants(3).constants()
    t = np.array([1e3])
    m0 = (1.0 + t) ** -2
    trivial = remainder_bound(-0.5, 10, m0, t)
    sharp = remainder_bound(-0.5, 10, m0, t, bc)
    assert sharp[0] < trivial[0]
    assert remainder_bound(0.0, 10, m0, t)[0] == 0.0


def test_required_depth_meets_tolerance():
    k = required_k_max(-1.0, 1e-6, 1e3, 1e-12)
    assert remainder_bound(-1.0, k, 1e-6, 1e3) <= 1e-12
    assert remainder_bound(-1.0, k - 1, 1e-6, 1e3) > 1e-12


def test_mgf_bound_dominates_series(pareto3_table):
    bc = estimate_constants(3).constants()
    h = -1.0
    d = max(1.0, 2.0 * bc.cbar / math.expm1(-h))
    values, trunc = mgf_series_values(pareto3_table, h)
    times = pareto3_table.grid.times
    bound = thm2_bound(bc.with_d(d), h, times, pareto3_table.values[0])
    assert np.all(values + trunc <= bound + 1e-10)


def test_table_grows_until_resolved():
    grid = TimeGrid.from_times([1.0, 10.0])
    table = mgf_table(Pareto(3.0), grid, (-1.0,), rtol=1e-6)
    values, bounds = mgf_series_values(table, -1.0)
    assert np.all(bounds <= 1e-6 * values)
    assert table.k_max > 0


def test_explicit_depth_is_respected():
    grid = TimeGrid.from_times([1.0])
    table = mgf_table(Pareto(3.0), grid, (-1.0,), k_max=3)
    assert table.k_max == 3


def test_growth_beyond_cap_raises():
    grid = TimeGrid.from_times([1.0, 10.0])
    with pytest.raises(TruncationError) as info:
        mgf_table(Pareto(3.0), grid, (-0.01,), rtol=1e-8, k_cap=20)
    assert info.value.required_k_max > 20


def test_growth_reuses_existing_rows():
    grid = TimeGrid.from_times([1.0, 10.0])
    seed = occupation_table(Pareto(3.0), grid, 2)
    table = mgf_table(Pareto(3.0), grid, (-2.0,), table=seed, rtol=1e-6)
    np.testing.assert_array_equal(table.values[:3], seed.values)


@pytest.mark.slow
@pytest.mark.parametrize("h", [-0.5, -1.0, -2.0])
def test_ratio_to_survival_approaches_limit(h):
    grid = TimeGrid.logarithmic(1e-2, 1e3, 150)
    bc = estimate_constants(3).constants()
    table = mgf_table(Pareto(3.0), grid, (h,), constants=bc)
    result = mgf_series(table, h, 1e3, bc)
    ratio = result.value / Pareto(3.0).survival(1e3)
    assert ratio == pytest.approx(thm1_limit(h), rel=0.02)
