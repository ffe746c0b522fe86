"""Exact partial-fraction forms for integer Pareto exponents.

With u = 1 + s and v = 1 + t - s (so u + v = 2 + t),

    1 / (u^(m-1) v^m) = sum_{k=1}^{m-1} A_k / ((2+t)^(2m-1-k) u^k)
                      + sum_{k=1}^{m}   B_k / ((2+t)^(2m-1-k) v^k)

with A_k = C(2m-2-k, m-1-k) and B_k = C(2m-2-k, m-k). Both follow from the
derivative limits at the poles: the j-th derivative of v^-m at the pole of u
contributes the rising factorial (m)_j / j!, and symmetrically for v.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np


def _integer_m(m: float) -> int:
    if isinstance(m, bool) or not float(m).is_integer() or m < 3:
        raise ValueError(f"partial-fraction forms need an integer m >= 3, got {m}")
    return int(m)


@dataclass(frozen=True)
class PartialFractions:
    """Combinatorial coefficients of the decomposition.

    Attributes:
        m: Pareto exponent.
        A: A_1..A_{m-1}.
        B: B_1..B_m.
    """

    m: int
    A: tuple[Fraction, ...]
    B: tuple[Fraction, ...]

    def rhs(self, s: float, t: float) -> float:
        """Evaluate the decomposition at (s, t)."""
        m = self.m
        w = 2.0 + t
        u = 1.0 + s
        v = 1.0 + t - s
        total = math.fsum(
            float(a) / (w ** (2 * m - 1 - k) * u**k) for k, a in enumerate(self.A, start=1)
        )
        total += math.fsum(
            float(b) / (w ** (2 * m - 1 - k) * v**k) for k, b in enumerate(self.B, start=1)
        )
        return total


def partial_fraction_coeffs(m: int) -> PartialFractions:
    """Exact coefficients (A_1..A_{m-1}, B_1..B_m); B_m is always 1.

    Raises:
        ValueError: If m is not an integer >= 3.
    """
    m = _integer_m(m)
    A = tuple(Fraction(math.comb(2 * m - 2 - k, m - 1 - k)) for k in range(1, m))
    B = tuple(Fraction(math.comb(2 * m - 2 - k, m - k)) for k in range(1, m + 1))
    return PartialFractions(m, A, B)


def _power_integral(k: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Integral of x^-k over [lo, hi]."""
    if k == 1:
        return np.log(hi / lo)
    return (lo ** (1 - k) - hi ** (1 - k)) / (k - 1)


def m1_closed_form(m: int, t: float | np.ndarray) -> float | np.ndarray:
    """Exact M_1(t) = P[N_t = 1] for Pareto(m) with integer m.

    Raises:
        ValueError: If m is not an integer >= 3 or t < 0.
    """
    pf = partial_fraction_coeffs(m)
    m = pf.m
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError(f"t must be >= 0, got {t}")
    w = 2.0 + arr
    one = np.ones_like(arr)
    # both inner integrals over [0, t] reduce to the integral of x^-k over [1, 1+t]
    total = np.zeros_like(arr)
    for k, a in enumerate(pf.A, start=1):
        total = total + float(a) * w ** -(2 * m - 1 - k) * _power_integral(k, one, 1.0 + arr)
    for k, b in enumerate(pf.B, start=1):
        total = total + float(b) * w ** -(2 * m - 1 - k) * _power_integral(k, one, 1.0 + arr)
    out = (m - 1) * total
    return float(out) if out.ndim == 0 else out


def lemma1_closed_form(m: int, d: float | np.ndarray, t: float | np.ndarray) -> float | np.ndarray:
    """Exact I_m(d, t), the integral over [0, t] of (m-1) / ((d+s)^m (1+t-s)^m).

    Uses the symmetric decomposition in u = d + s and v = 1 + t - s with
    u + v = 1 + d + t; the coefficient of both u^-k and v^-k is C(2m-1-k, m-k).

    Raises:
        ValueError: If m is not an integer >= 3.
    """
    m = _integer_m(m)
    d_arr, t_arr = np.broadcast_arrays(np.asarray(d, dtype=float), np.asarray(t, dtype=float))
    w = 1.0 + d_arr + t_arr
    total = np.zeros_like(w)
    for k in range(1, m + 1):
        coeff = math.comb(2 * m - 1 - k, m - k) * w ** -(2 * m - k)
        inner = _power_integral(k, d_arr, d_arr + t_arr) + _power_integral(
            k, np.ones_like(t_arr), 1.0 + t_arr
        )
        total = total + coeff * inner
    out = (m - 1) * total
    return float(out) if out.ndim == 0 else out
