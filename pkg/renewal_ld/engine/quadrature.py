"""Adaptive composite Gauss-Legendre quadrature.

Each panel is integrated with an n-point Gauss-Legendre rule and compared
with the sum over its two halves; panels whose discrepancy exceeds their
share of the tolerance are bisected, with the tolerance halved per level.
A panel whose two estimates agree to round-off is accepted regardless of
its share.
"""

from collections.abc import Callable
from functools import lru_cache
import logging
import math
from typing import NamedTuple

import numpy as np
from scipy.special import roots_legendre

from renewal_ld.errors import QuadratureError

logger = logging.getLogger(__name__)

DEFAULT_ORDER = 10
MAX_PANELS = 4000
# panels agreeing to this relative precision are at round-off
ROUNDOFF = 64.0 * np.finfo(float).eps


class QuadResult(NamedTuple):
    value: float
    error: float
    panels: int


@lru_cache(maxsize=16)
def _nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(order)
    return x, w


def gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray], a: float, b: float, order: int = DEFAULT_ORDER
) -> float:
    """Fixed-order Gauss-Legendre estimate of the integral of f over [a, b]."""
    x, w = _nodes(order)
    half = 0.5 * (b - a)
    return float(half * np.dot(w, f(half * x + 0.5 * (a + b))))


def adaptive_gauss_legendre(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    atol: float = 1e-10,
    order: int = DEFAULT_ORDER,
    max_panels: int = MAX_PANELS,
    breakpoints: tuple[float, ...] = (),
) -> QuadResult:
    """Integrate a vectorized function over [a, b] to an absolute tolerance.

    Args:
        f: Integrand accepting an array of abscissae.
        a: Lower limit.
        b: Upper limit.
        atol: Absolute tolerance for the whole integral.
        order: Gauss-Legendre points per panel.
        max_panels: Panel budget before giving up.
        breakpoints: Interior points where the range is split up front.

    Returns:
        QuadResult with the value, the summed error estimate and panel count.

    Raises:
        QuadratureError: If the panel budget is exhausted above tolerance.
    """
    if b <= a:
        return QuadResult(0.0, 0.0, 0)

    edges = [a, *sorted(p for p in breakpoints if a < p < b), b]
    width = b - a
    # (lo, hi, whole, tol) processed depth-first; accepted panels kept in order
    stack = [
        (lo, hi, gauss_legendre(f, lo, hi, order), atol * (hi - lo) / width)
        for lo, hi in zip(edges[:-1], edges[1:])
    ][::-1]
    accepted: list[tuple[float, float]] = []
    total_error = 0.0
    panels = 0
    while stack:
        lo, hi, whole, tol = stack.pop()
        mid = 0.5 * (lo + hi)
        left = gauss_legendre(f, lo, mid, order)
        right = gauss_legendre(f, mid, hi, order)
        err = abs(left + right - whole)
        panels += 1
        if err <= tol or err <= ROUNDOFF * abs(left + right) or mid in (lo, hi):
            accepted.append((lo, left + right))
            total_error += err
            continue
        if panels >= max_panels:
            raise QuadratureError(
                f"adaptive quadrature on [{a}, {b}] exhausted {max_panels} panels "
                f"(local error {err:.3e} > {tol:.3e})",
                error_estimate=err,
            )
        stack.append((mid, hi, right, 0.5 * tol))
        stack.append((lo, mid, left, 0.5 * tol))

    accepted.sort(key=lambda item: item[0])
    value = math.fsum(v for _, v in accepted)
    return QuadResult(value, total_error, panels)
