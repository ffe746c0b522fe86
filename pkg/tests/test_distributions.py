import math

from hypothesis import given, strategies as st
import numpy as np
import pytest
from scipy import stats

from renewal_ld.engine.distributions import (
    InverseRayleigh,
    LogNormal,
    Pareto,
    from_spec,
    uniform_open,
)
from renewal_ld.engine.quadrature import adaptive_gauss_legendre
from renewal_ld.models import InverseRayleighSpec, LogNormalSpec, ParetoSpec
from tests.conftest import ALL_FAMILIES


def test_pareto_density_at_origin():
    assert Pareto(3.0).pdf(1e-300) == pytest.approx(2.0, rel=1e-15)


def test_density_and_cdf_vanish_off_support(any_dist):
    assert any_dist.pdf(-1.0) == 0.0
    assert any_dist.cdf(-1.0) == 0.0
    assert any_dist.cdf(0.0) == 0.0


def test_inverse_rayleigh_point_values():
    dist = InverseRayleigh(1.0)
    assert dist.pdf(1.0) == pytest.approx(math.exp(-0.5), rel=1e-14)
    assert dist.cdf(1.0) == pytest.approx(0.60653066, rel=1e-7)


def test_cdf_point_values():
    assert Pareto(3.0).cdf(1.0) == pytest.approx(0.75, rel=1e-15)
    assert LogNormal(0.0, 1.5).cdf(1.0) == 0.5


def test_survival_point_values():
    assert Pareto(3.0).survival(9.0) == pytest.approx(0.01, rel=1e-15)
    assert Pareto(3.5).survival(3.0) == pytest.approx(0.03125, rel=1e-15)
    assert LogNormal(0.0, 1.5).survival(0.0) == 1.0


def test_sample_inverts_known_points():
    assert Pareto(3.0).sample(0.75) == pytest.approx(1.0, rel=1e-14)
    assert InverseRayleigh(1.0).sample(math.exp(-0.5)) == pytest.approx(1.0, rel=1e-14)
    assert Pareto(3.0).sample(1e-300) > 0.0


@pytest.mark.parametrize("u", [0.0, 1.0, -0.5, 1.5, float("nan")])
def test_sample_rejects_variates_outside_open_interval(any_dist, u):
    with pytest.raises(ValueError, match="uniform variate"):
        any_dist.sample(u)


def test_means():
    assert Pareto(3.0).mean() == 1.0
    assert InverseRayleigh(1.0).mean() == pytest.approx(1.25331, rel=1e-5)
    assert LogNormal(0.0, 1.5).mean() == pytest.approx(3.08022, rel=1e-5)
    assert Pareto(3.0).mean_rate == 1.0


@pytest.mark.parametrize(
    "build",
    [lambda: Pareto(2.0), lambda: Pareto(1.5), lambda: InverseRayleigh(0.0), lambda: LogNormal(0.0, 0.0)],
)
def test_invalid_parameters_are_rejected(build):
    with pytest.raises(ValueError):
        build()


def test_density_integrates_to_one(any_dist):
    upper = 1e4
    body = adaptive_gauss_legendre(
        any_dist.pdf, 0.0, upper, atol=1e-11, breakpoints=(0.1, 1.0, 10.0, 100.0, 1000.0)
    )
    assert body.value + any_dist.survival(upper) == pytest.approx(1.0, abs=1e-9)


@given(
    st.sampled_from(ALL_FAMILIES),
    st.floats(min_value=-10.0, max_value=1e6, allow_nan=False),
)
def test_survival_complements_cdf(dist, t):
    assert dist.survival(t) + dist.cdf(t) == pytest.approx(1.0, abs=1e-15)


@given(
    st.sampled_from(ALL_FAMILIES),
    st.lists(st.floats(min_value=0.0, max_value=1e5), min_size=2, max_size=50),
)
def test_cdf_monotone_and_survival_antitone(dist, ts):
    t = np.sort(np.asarray(ts))
    assert np.all(np.diff(dist.cdf(t)) >= 0.0)
    assert np.all(np.diff(dist.survival(t)) <= 0.0)


@given(st.floats(min_value=2.05, max_value=10.0), st.floats(min_value=0.0, max_value=1e6))
def test_pareto_survival_is_exact_power(m, t):
    dist = Pareto(m)
    assert dist.survival(t) * (1.0 + t) ** (m - 1.0) == pytest.approx(1.0, rel=1e-14)


def test_sample_round_trips_cdf(any_dist):
    t = np.geomspace(0.1, 100.0, 50)
    np.testing.assert_allclose(any_dist.sample(any_dist.cdf(t)), t, rtol=1e-10)


def test_draws_pass_kolmogorov_smirnov(any_dist):
    samples = any_dist.draw(np.random.default_rng(7), 100_000)
    assert np.all(samples > 0.0)
    assert stats.kstest(samples, any_dist.cdf).statistic < 0.01


def test_uniform_open_never_returns_zero(rng):
    u = uniform_open(rng, 10_000)
    assert np.all((u > 0.0) & (u < 1.0))


def test_array_and_scalar_shapes(pareto3):
    assert isinstance(pareto3.pdf(1.0), float)
    assert pareto3.survival(np.array([0.0, 1.0])).shape == (2,)


@pytest.mark.parametrize(
    ("spec", "expected"),
    [
        (ParetoSpec(m=3.0), Pareto(3.0)),
        (InverseRayleighSpec(beta=1.0), InverseRayleigh(1.0)),
        (LogNormalSpec(mu=0.0, sigma=1.5), LogNormal(0.0, 1.5)),
    ],
)
def test_from_spec_round_trips(spec, expected):
    dist = from_spec(spec)
    assert dist == expected
    assert dist.to_spec() == spec


def test_label_names_family_and_parameters():
    assert Pareto(3.0).label == "pareto(m=3)"
    assert LogNormal(0.0, 1.5).label == "lognormal(mu=0,sigma=1.5)"
