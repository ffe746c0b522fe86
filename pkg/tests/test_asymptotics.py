import math
from pathlib import Path

import numpy as np
import pytest

from renewal_ld.config import load_experiment_config
from renewal_ld.engine.asymptotics import (
    affine_trend,
    choose_fit_window,
    finite_cgf,
    finite_rate,
    fitted_curve,
    floor_bound_curve,
    plateau_width,
    rate_minimum,
    ratio_curve,
    tail_fit,
)
from renewal_ld.engine.curves import CurveSeries
from renewal_ld.engine.distributions import InverseRayleigh, Pareto, from_spec
from renewal_ld.engine.estimators import estimate_mgf, estimate_pmf, tail_curve
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.series import mgf_series_values, mgf_table
from renewal_ld.engine.simulation import simulate
from renewal_ld.errors import InsufficientDataError
from renewal_ld.models import Estimate, FitOptions

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TREND_TIMES = (10.0, 100.0, 1000.0)


def synthetic_tail(dist, t, a=1.0, b=2.0, c=1.0):
    log_p = a * np.log(dist.survival(t)) + c * np.log(t) + b
    return CurveSeries("tail_x0.5", t, np.exp(log_p), None, {"x": 0.5})


def test_cgf_of_survival_is_closed_form(pareto3):
    t = np.array([0.0, 1.0, 10.0, 100.0])
    mgf = CurveSeries("mgf_h-1", t, pareto3.survival(t), None, {"h": -1.0})
    cgf = finite_cgf(mgf)
    assert cgf.name == "cgf_h-1"
    np.testing.assert_allclose(cgf.x, t[1:])
    np.testing.assert_allclose(cgf.values, -2.0 * np.log1p(t[1:]) / t[1:], rtol=1e-14)
    assert cgf.metadata["dropped"] == 0


def test_cgf_drops_nonpositive_values():
    mgf = CurveSeries("mgf_h-1", [0.0, 1.0, 2.0], [1.0, 0.0, 0.5], [0.0, 0.0, 0.1])
    cgf = finite_cgf(mgf)
    assert cgf.metadata["dropped"] == 1
    np.testing.assert_array_equal(cgf.x, [2.0])
    assert cgf.stderr[0] == pytest.approx(0.1 / (2.0 * 0.5))


def test_rate_shift_has_zero_minimum():
    pmf = [(k, Estimate(value=p, stderr=0.01, n=100)) for k, p in enumerate([0.1, 0.6, 0.3, 0.0])]
    raw, shifted = finite_rate(pmf, 2.0)
    np.testing.assert_allclose(raw.x, [0.0, 0.5, 1.0])
    assert shifted.values.min() == 0.0
    assert np.all(shifted.values >= 0.0)
    assert raw.metadata["omitted"] == 1
    assert rate_minimum(raw) == 0.5
    assert raw.values[1] == pytest.approx(-math.log(0.6) / 2.0)


def test_rate_rejects_all_zero_and_nonpositive_t():
    pmf = [(0, Estimate(value=0.0, stderr=0.0, n=10))]
    with pytest.raises(InsufficientDataError):
        finite_rate(pmf, 1.0)
    with pytest.raises(ValueError):
        finite_rate([(0, Estimate(value=1.0, stderr=0.0, n=1))], 0.0)


def test_plateau_width():
    shifted = CurveSeries("r", [0.0, 0.5, 1.0, 1.5], [0.3, 0.005, 0.0, 0.2], abscissa="x")
    assert plateau_width(shifted) == 0.5
    assert plateau_width(shifted, threshold=0.0) == 0.0


def test_rate_minimum_near_mean_rate():
    grid = TimeGrid.from_times([100.0])
    hist = simulate(Pareto(3.0), grid, 20_000, seed=8)
    raw, _ = finite_rate(estimate_pmf(hist, 1), 100.0)
    assert abs(rate_minimum(raw) - 1.0) < 0.2


def test_affine_trend():
    assert affine_trend({10.0: -0.3, 100.0: -0.05, 1000.0: -0.008})
    assert not affine_trend({10.0: -0.3, 100.0: -0.4})
    assert not affine_trend({10.0: float("nan"), 100.0: -0.4})


def test_ratio_is_one_at_origin(pareto3):
    t = np.array([0.0, 10.0])
    mgf = CurveSeries("mgf_h-1", t, [1.0, 0.02], None, {"h": -1.0})
    ratio = ratio_curve(mgf, pareto3)
    assert ratio.name == "ratio_h-1"
    assert ratio.values[0] == 1.0
    assert ratio.values[1] == pytest.approx(0.02 * 121.0)
    assert ratio.extra["ratio_to_limit"][0] == pytest.approx(1.0 - math.exp(-1.0))


def test_ratio_without_limit_for_nonnegative_h(pareto3):
    mgf = CurveSeries("mgf_h0", [0.0, 1.0], [1.0, 1.0], None, {"h": 0.0})
    assert "ratio_to_limit" not in ratio_curve(mgf, pareto3).extra


def test_fit_recovers_synthetic_model(pareto3):
    t = np.geomspace(10.0, 1e3, 40)
    fit = tail_fit(synthetic_tail(pareto3, t), pareto3, FitOptions(t_min=10.0, t_max=1e3))
    assert fit.a == pytest.approx(1.0, abs=1e-10)
    assert fit.b == pytest.approx(2.0, abs=1e-10)
    assert fit.residual == pytest.approx(0.0, abs=1e-18)
    assert fit.n_points == 40


def test_free_coefficient_fit(pareto3):
    t = np.geomspace(10.0, 1e3, 40)
    options = FitOptions(t_min=10.0, t_max=1e3, free_log_coefficient=True)
    fit = tail_fit(synthetic_tail(pareto3, t, a=0.9, b=1.5, c=1.2), pareto3, options)
    assert fit.a == pytest.approx(0.9, abs=1e-8)
    assert fit.log_t_coefficient == pytest.approx(1.2, abs=1e-8)
    assert fit.free_log_coefficient


def test_fit_on_floor_bound_has_unit_slope():
    dist = InverseRayleigh(1.0)
    grid = TimeGrid.logarithmic(1e2, 1e6, 60)
    floor = floor_bound_curve(dist, grid, 0.5)
    fit = tail_fit(floor, dist, FitOptions(t_min=1e5, t_max=1e6))
    assert fit.a == pytest.approx(1.0, abs=1e-3)
    assert fit.b == pytest.approx(math.log(0.5), abs=1e-2)


def test_floor_bound_starts_where_count_is_positive(pareto3):
    grid = TimeGrid.from_times([0.5, 1.0, 3.0, 10.0])
    floor = floor_bound_curve(pareto3, grid, 0.5)
    np.testing.assert_array_equal(floor.x, [3.0, 10.0])
    assert floor.values[1] == pytest.approx(5.0 / 121.0)


def test_automatic_window_is_last_usable_decade():
    curve = CurveSeries(
        "tail", [1.0, 10.0, 50.0, 100.0, 200.0], [0.5, 0.1, 0.05, 0.01, 0.0], [0.0, 1e-3, 1e-3, 1e-3, 0.0]
    )
    assert choose_fit_window(curve) == (10.0, 100.0)


def test_fit_needs_three_points(pareto3):
    t = np.array([10.0, 100.0])
    with pytest.raises(InsufficientDataError, match="needs >= 3"):
        tail_fit(synthetic_tail(pareto3, t), pareto3, FitOptions(t_min=1.0, t_max=1e3))


def test_fit_without_usable_points_raises(pareto3):
    curve = CurveSeries("tail", [1.0, 2.0], [0.0, 0.0])
    with pytest.raises(InsufficientDataError, match="no usable points"):
        tail_fit(curve, pareto3)


def test_fitted_curve_marks_window(pareto3):
    t = np.geomspace(1.0, 1e3, 31)
    curve = synthetic_tail(pareto3, t)
    fit = tail_fit(curve, pareto3, FitOptions(t_min=10.0, t_max=1e3))
    out = fitted_curve(fit, curve, pareto3)
    np.testing.assert_allclose(out.extra["log_fit"], out.extra["log_data"], atol=1e-10)
    assert out.extra["in_window"].sum() == fit.n_points
    assert out.metadata["a"] == fit.a


def test_finite_cgf_is_nonpositive_and_monotone_in_h():
    grid = TimeGrid.from_times([1.0, 10.0, 100.0])
    hist = simulate(Pareto(3.0), grid, 20_000, seed=31)
    hs = [-3.0, -2.0, -1.0, -0.5, -0.1, 0.0]
    phis = []
    for h in hs:
        values = [estimate_mgf(hist, i, h).value for i in range(len(grid))]
        mgf = CurveSeries(f"mgf_h{h:g}", grid.times, values, None, {"h": h})
        phis.append(finite_cgf(mgf).values)
    phis = np.array(phis)
    assert np.all(phis <= 1e-15)
    assert np.all(np.diff(phis, axis=0) >= -1e-15)


def test_shifted_rate_curves_agree_across_seeds():
    grid = TimeGrid.from_times([10.0])
    curves = [
        finite_rate(estimate_pmf(simulate(Pareto(3.0), grid, 50_000, seed=s), 1), 10.0)
        for s in (101, 202)
    ]
    (raw_a, a), (raw_b, b) = curves
    common, ia, ib = np.intersect1d(a.x, b.x, return_indices=True)
    # the shift adds the noise of each curve's minimum
    se_min = a.stderr[np.argmin(raw_a.values)] ** 2 + b.stderr[np.argmin(raw_b.values)] ** 2
    combined = np.sqrt(a.stderr[ia] ** 2 + b.stderr[ib] ** 2 + se_min)
    resolved = (a.values[ia] < 0.4) & (b.values[ib] < 0.4)
    assert resolved.sum() >= 5
    close = np.abs(a.values[ia] - b.values[ib]) <= 3.0 * combined
    assert close[resolved].mean() >= 0.9


@pytest.mark.slow
@pytest.mark.parametrize(
    "name, a, b",
    [("fig5a", 1.01, 0.92), ("fig5b", 1.00, 0.43), ("fig5c", 1.00, 2.00)],
)
def test_tail_fit_recovers_family_exponents(name, a, b):
    config = load_experiment_config(CONFIGS / f"{name}.json")
    dist = from_spec(config.distribution)
    hist = simulate(dist, TimeGrid.from_spec(config.grid), config.n_traj, seed=20240101, threads=4)
    x = config.x[0] if config.x else 0.5 * dist.mean_rate
    fit = tail_fit(tail_curve(hist, x), dist, config.fit)
    assert fit.a == pytest.approx(a, abs=0.15)
    assert fit.b == pytest.approx(b, abs=1.0)


@pytest.mark.slow
def test_lognormal_tail_fit_is_sublinear_in_log_survival():
    config = load_experiment_config(CONFIGS / "fig5d.json")
    dist = from_spec(config.distribution)
    hist = simulate(dist, TimeGrid.from_spec(config.grid), config.n_traj, seed=20240101, threads=4)
    fit = tail_fit(tail_curve(hist, 0.5 * dist.mean_rate), dist, config.fit)
    assert fit.a < 1.0


@pytest.mark.slow
@pytest.mark.parametrize("name", ["fig4a", "fig4b", "fig4c", "fig4d"])
def test_cgf_rises_and_rate_plateau_widens_with_t(name):
    config = load_experiment_config(CONFIGS / f"{name}.json")
    dist = from_spec(config.distribution)
    grid = TimeGrid.from_spec(config.grid)

    table = mgf_table(dist, grid, (-1.0,), rtol=1e-6, threads=4)
    values, _ = mgf_series_values(table, -1.0)
    phi = {t: math.log(values[grid.index_of(t)]) / t for t in TREND_TIMES}
    assert affine_trend(phi)

    hist = simulate(dist, grid, config.n_traj, seed=20240101, threads=4)
    widths = [
        plateau_width(finite_rate(estimate_pmf(hist, grid.index_of(t)), t)[1])
        for t in TREND_TIMES
    ]
    assert widths[0] <= widths[1] <= widths[2]
