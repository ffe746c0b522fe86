"""Uniform bounds on occupation increments and the finite-time MGF.

For Pareto waiting times with integer exponent m, the increments
M_n - M_{n-1} are bounded by C(m) d^m/(d+t)^m (1 + cbar/d)^(n-1), which
yields bounds on M_n, on P[S_n >= t] and on M(t, h). The constants cbar
and C(m) are only known to exist; ``estimate_constants`` certifies values
on a search grid.
"""

from dataclasses import dataclass, field
import logging
import math
from typing import NamedTuple

import numpy as np

from renewal_ld.engine.partial_fractions import _integer_m, lemma1_closed_form, m1_closed_form
from renewal_ld.engine.quadrature import adaptive_gauss_legendre
from renewal_ld.errors import ConvergenceError, PreconditionError
from renewal_ld.models import BoundConstants

logger = logging.getLogger(__name__)

SEARCH_D = (1.0, 2.0, 5.0, 10.0, 1e2, 1e3)
SEARCH_T = (1e-2, 1e4, 200)
SAFETY = 0.10
STABILITY_RTOL = 0.05


def decay_factor(d: float, t: float | np.ndarray, m: int) -> float | np.ndarray:
    """d^m / (d+t)^m."""
    return (d / (d + np.asarray(t, dtype=float))) ** m


class Lemma1Check(NamedTuple):
    lhs: float
    rhs: float
    satisfied: bool
    margin: float


def lemma1_integral(m: int, d: float, t: float, *, rtol: float = 1e-10) -> float:
    """I_m(d, t) by adaptive quadrature, to a tolerance relative to (d+t)^-m.

    Used as an independent cross-check of ``lemma1_closed_form``.

    Raises:
        QuadratureError: If the panel budget runs out.
    """
    m = _integer_m(m)
    if t <= 0.0:
        return 0.0

    def integrand(s: np.ndarray) -> np.ndarray:
        return (m - 1) / ((d + s) ** m * (1.0 + t - s) ** m)

    atol = rtol * (d + t) ** -m
    return adaptive_gauss_legendre(integrand, 0.0, t, atol=atol, breakpoints=(0.5 * t,)).value


def lemma1_check(m: int, d: float, t: float, cbar: float) -> Lemma1Check:
    """Compare I_m(d, t) against (1 + cbar/d) (d+t)^-m.

    The left side is the exact partial-fraction value.

    Args:
        m: Integer exponent >= 3.
        d: Shift, >= 1.
        t: Time, >= 0.
        cbar: Candidate constant, >= 0 (zero is accepted so that a bound
            without slack can be shown to fail).

    Returns:
        lhs, rhs, whether lhs <= rhs, and the relative margin (rhs - lhs)/rhs.
    """
    if d < 1.0 or t < 0.0 or cbar < 0.0:
        raise ValueError(f"lemma1_check needs d >= 1, t >= 0, cbar >= 0; got {d}, {t}, {cbar}")
    lhs = float(lemma1_closed_form(m, d, t)) if t > 0.0 else 0.0
    rhs = (1.0 + cbar / d) * (d + t) ** -m
    return Lemma1Check(lhs, rhs, lhs <= rhs, (rhs - lhs) / rhs)


def prop1_bound(bc: BoundConstants, n: int, t: float | np.ndarray) -> float | np.ndarray:
    """C(m) d^m/(d+t)^m (1 + cbar/d)^(n-1), the bound on M_n - M_{n-1}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return bc.Cm * decay_factor(bc.d, t, bc.m) * bc.alpha ** (n - 1)


def occupation_increment_bound(bc: BoundConstants, n: int, t, m0):
    """M_n(t) <= M_0(t) + n C(m) d^m/(d+t)^m (1 + cbar/d)^(n-1)."""
    return np.asarray(m0) + n * prop1_bound(bc, n, t)


def sn_tail_bound(bc: BoundConstants, n: int, t, m0):
    """P[S_n >= t] <= n M_0(t) + n^2 C(m) d^m/(d+t)^m (1 + cbar/d)^(n-1)."""
    return n * np.asarray(m0) + n * n * prop1_bound(bc, n, t)


def min_admissible_d(cbar: float, h: float) -> float:
    """Smallest d (exclusive) for which (1 + cbar/d) e^h < 1."""
    if h >= 0:
        return math.inf
    return cbar / math.expm1(-h)


def thm2_bound(bc: BoundConstants, h: float, t, m0):
    """Uniform bound on M(t, h) for h < 0.

    M(t,h) <= M_0(t)/(1 - e^h) + C(m) d^m/(d+t)^m alpha e^h / (1 - alpha e^h)^2

    Raises:
        ValueError: If h >= 0.
        PreconditionError: If d does not exceed cbar/(e^-h - 1).
    """
    if not h < 0:
        raise ValueError(f"thm2_bound needs h < 0, got {h}")
    d_min = min_admissible_d(bc.cbar, h)
    if not bc.d > d_min:
        raise PreconditionError(
            f"d={bc.d} too small for h={h}; need d > {d_min:.6g}", admissible=d_min
        )
    z = math.exp(h)
    az = bc.alpha * z
    return np.asarray(m0) / (1.0 - z) + bc.Cm * decay_factor(bc.d, t, bc.m) * az / (1.0 - az) ** 2


def feller_ratio(m_tail: float, k: int, t, p_sk):
    """t^(m_tail - 1) P[S_k > t]; tends to k for regularly varying tails."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return np.power(np.asarray(t, dtype=float), m_tail - 1.0) * np.asarray(p_sk)


def noninteger_tail_dominance(m: float, t) -> np.ndarray:
    """Survival ratio of Pareto(m) to Pareto(floor m); never above 1."""
    t = np.asarray(t, dtype=float)
    return np.power(1.0 + t, -(m - math.floor(m)))


@dataclass(frozen=True)
class EstimatedConstants:
    """Grid-certified constants with the grids used.

    Attributes:
        m: Exponent.
        cbar: Inflated c-bar.
        Cm: Inflated C(m).
        cbar_sup: Raw supremum found for c-bar.
        Cm_sup: Raw supremum found for C(m).
        d_values: d search grid.
        t_values: t search grid.
    """

    m: int
    cbar: float
    Cm: float
    cbar_sup: float
    Cm_sup: float
    d_values: tuple[float, ...]
    t_values: np.ndarray = field(repr=False)

    def constants(self, d: float = 1.0) -> BoundConstants:
        """Bound constants at shift d; thm2_bound further needs d > cbar/(e^-h - 1)."""
        return BoundConstants(m=self.m, cbar=self.cbar, Cm=self.Cm, d=d)

    def describe(self) -> dict:
        """JSON-ready summary for run metadata."""
        return {
            "m": self.m,
            "cbar": self.cbar,
            "Cm": self.Cm,
            "cbar_sup": self.cbar_sup,
            "Cm_sup": self.Cm_sup,
            "d_values": list(self.d_values),
            "t_min": float(self.t_values[0]),
            "t_max": float(self.t_values[-1]),
            "t_points": int(self.t_values.size),
        }


def _check_stable(values: np.ndarray, t: np.ndarray, what: str) -> None:
    """Fail if the supremum is still growing across the last decade of t."""
    last = t >= t[-1] / 10.0
    if not np.any(~last):
        return
    head = float(np.max(values[~last]))
    tail = float(np.max(values[last]))
    if tail > head and tail - head > STABILITY_RTOL * max(abs(head), 1e-300):
        raise ConvergenceError(
            f"{what} supremum did not stabilize on t <= {t[-1]:g} "
            f"(last decade {tail:.6g} vs earlier {head:.6g})"
        )


def estimate_constants(
    m: int,
    *,
    d_values: tuple[float, ...] = SEARCH_D,
    t_values: np.ndarray | None = None,
    safety: float = SAFETY,
) -> EstimatedConstants:
    """Certify cbar and C(m) on a search grid.

    cbar is the supremum over (d, t) of d (I_m(d,t) (d+t)^m - 1), clamped
    positive; C(m) is the supremum over t of (M_1 - M_0)(t) (1+t)^m. Both
    are inflated by ``safety``.

    Raises:
        ConvergenceError: If either supremum is still growing at the edge of
            the t grid.
    """
    m = _integer_m(m)
    if t_values is None:
        t_values = np.geomspace(SEARCH_T[0], SEARCH_T[1], SEARCH_T[2])
    t_values = np.asarray(t_values, dtype=float)

    best = -math.inf
    for d in d_values:
        excess = d * (lemma1_closed_form(m, d, t_values) * (d + t_values) ** m - 1.0)
        _check_stable(excess, t_values, f"cbar (d={d:g})")
        best = max(best, float(np.max(excess)))
    cbar_sup = max(best, 0.0)
    cbar = max(cbar_sup, 1e-12) * (1.0 + safety)

    m0 = (1.0 + t_values) ** -(m - 1)
    gap = (m1_closed_form(m, t_values) - m0) * (1.0 + t_values) ** m
    _check_stable(gap, t_values, "C(m)")
    Cm_sup = float(np.max(gap))
    Cm = max(Cm_sup, 1e-12) * (1.0 + safety)

    logger.info(f"Estimated constants for m={m}: cbar={cbar:.6g}, C(m)={Cm:.6g}")
    return EstimatedConstants(m, cbar, Cm, cbar_sup, Cm_sup, tuple(d_values), t_values)


def verification_axes(points: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """(d, t) axes offset from the search grid, for independent certification."""
    d = np.geomspace(1.0, 1e3, points + 2)[1:-1]
    t = np.geomspace(SEARCH_T[0], SEARCH_T[1], points + 2)[1:-1] * 1.013
    return d, t
