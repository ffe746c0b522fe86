from fractions import Fraction
import math

import numpy as np
import pytest

from renewal_ld.engine.bounds import lemma1_integral
from renewal_ld.engine.distributions import Pareto
from renewal_ld.engine.partial_fractions import (
    lemma1_closed_form,
    m1_closed_form,
    partial_fraction_coeffs,
)
from renewal_ld.engine.quadrature import adaptive_gauss_legendre


@pytest.mark.parametrize("m", [3, 4, 5, 8])
def test_reconstruction_identity_at_random_points(m, rng):
    pf = partial_fraction_coeffs(m)
    t = rng.uniform(0.0, 100.0, 100)
    s = rng.uniform(0.0, 1.0, 100) * t
    for si, ti in zip(s, t):
        exact = 1.0 / ((1.0 + si) ** (m - 1) * (1.0 + ti - si) ** m)
        assert pf.rhs(si, ti) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("m", [3, 4, 5, 6])
def test_last_b_coefficient_is_one(m):
    pf = partial_fraction_coeffs(m)
    assert pf.B[-1] == 1
    assert len(pf.A) == m - 1
    assert len(pf.B) == m


def test_m3_coefficients():
    pf = partial_fraction_coeffs(3)
    assert pf.A == (Fraction(3), Fraction(1))
    assert pf.B == (Fraction(3), Fraction(2), Fraction(1))


@pytest.mark.parametrize("m", [2, 3.5, 0, True])
def test_non_integer_or_small_m_rejected(m):
    with pytest.raises(ValueError):
        partial_fraction_coeffs(m)


@pytest.mark.parametrize("m", [3, 4, 5])
def test_m1_closed_form_matches_direct_integral(m):
    dist = Pareto(float(m))
    for t in (1e-2, 0.5, 1.0, 10.0, 300.0):

        def integrand(s, t=t):
            return dist.pdf(s) * dist.survival(t - s)

        direct = adaptive_gauss_legendre(integrand, 0.0, t, atol=1e-13).value
        assert m1_closed_form(m, t) == pytest.approx(direct, abs=1e-12)


def test_m1_closed_form_vanishes_at_zero():
    assert m1_closed_form(3, 0.0) == 0.0
    with pytest.raises(ValueError):
        m1_closed_form(3, -1.0)


def test_m1_derivative_at_origin_matches_density():
    # M_1(t) ~ p(0) t for small t; p(0) = m - 1 for this Pareto family
    h = 1e-6
    slope = (m1_closed_form(4, 2 * h) - m1_closed_form(4, h)) / h
    assert slope == pytest.approx(3.0, rel=1e-4)


def test_m1_closed_form_is_vectorized():
    t = np.array([0.0, 1.0, 10.0])
    out = m1_closed_form(3, t)
    assert out.shape == (3,)
    assert out[1] == m1_closed_form(3, 1.0)


@pytest.mark.parametrize("m", [3, 4])
@pytest.mark.parametrize(("d", "t"), [(1.0, 0.3), (1.0, 10.0), (7.0, 50.0), (1e3, 1e3)])
def test_lemma1_closed_form_matches_quadrature(m, d, t):
    closed = lemma1_closed_form(m, d, t)
    assert closed == pytest.approx(lemma1_integral(m, d, t), rel=1e-9)


def test_lemma1_unit_shift_matches_high_order_rule():
    t = 5.0
    closed = lemma1_closed_form(3, 1.0, t)
    direct = 2.0 * math.fsum(
        1.0 / ((1.0 + s) ** 3 * (1.0 + t - s) ** 3) * w
        for s, w in zip(*_gl_nodes(0.0, t, 200))
    )
    assert closed == pytest.approx(direct, rel=1e-10)


def _gl_nodes(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return half * x + 0.5 * (a + b), half * w
