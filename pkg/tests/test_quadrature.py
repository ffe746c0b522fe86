import math

import numpy as np
import pytest

from renewal_ld.engine.quadrature import adaptive_gauss_legendre, gauss_legendre
from renewal_ld.errors import QuadratureError


def test_fixed_rule_is_exact_for_low_degree_polynomials():
    assert gauss_legendre(lambda x: x**19, 0.0, 1.0) == pytest.approx(1.0 / 20.0, rel=1e-14)


def test_adaptive_reaches_tolerance_on_peaked_integrand():
    result = adaptive_gauss_legendre(lambda x: 1.0 / (1e-3 + x * x), -1.0, 1.0, atol=1e-10)
    exact = 2.0 * math.atan(1.0 / math.sqrt(1e-3)) / math.sqrt(1e-3)
    assert result.value == pytest.approx(exact, abs=1e-9)
    assert result.panels > 1


def test_breakpoints_split_the_range():
    result = adaptive_gauss_legendre(np.abs, -1.0, 3.0, atol=1e-13, breakpoints=(0.0, 7.0))
    assert result.value == pytest.approx(5.0, abs=1e-13)


def test_empty_range_is_zero():
    assert adaptive_gauss_legendre(np.exp, 2.0, 1.0).value == 0.0


def test_panel_budget_exhaustion_raises():
    with pytest.raises(QuadratureError) as info:
        adaptive_gauss_legendre(
            lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 0.0, 1.0, atol=1e-15, max_panels=20
        )
    assert info.value.error_estimate > 0.0


def test_tolerance_below_round_off_still_converges():
    result = adaptive_gauss_legendre(lambda x: 1e-30 * np.exp(-x), 0.0, 50.0, atol=1e-50)
    assert result.value == pytest.approx(1e-30 * -math.expm1(-50.0), rel=1e-12)
