"""Reconstruction of M(t, h) = E[exp(h N_t)] from an occupation table.

With z = e^h < 1 the MGF is rewritten over the tail probabilities of the
partial sums,

    M(t, h) = (1 - z) sum_{k>=1} z^(k-1) P[S_k >= t],

and a table of depth k_max supplies P[S_k >= t] for k <= k_max + 1. The
remainder of the truncated sum is bounded either trivially (P <= 1) or, for
integer Pareto exponents with certified constants, through the bound on
P[S_n >= t] summed in closed form.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from renewal_ld.engine.bounds import decay_factor, min_admissible_d
from renewal_ld.engine.distributions import WaitingDistribution
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.occupation import OccupationTable, extend_table, occupation_table
from renewal_ld.errors import TruncationError
from renewal_ld.models import BoundConstants

logger = logging.getLogger(__name__)

DEFAULT_RTOL = 1e-8
K_CAP = 400
K_SEARCH_LIMIT = 100_000


class MgfSeries(NamedTuple):
    value: float
    truncation_bound: float
    k_max: int


def thm1_limit(h: float) -> float:
    """Large-t limit of M(t, h)/M_0(t) for regularly varying tails, 1/(1 - e^h)."""
    if not h < 0:
        raise ValueError(f"limit is defined for h < 0, got {h}")
    return -1.0 / math.expm1(h)


def _check_h(h: float) -> None:
    if not math.isfinite(h) or h > 0:
        raise ValueError(f"series form needs a finite h <= 0, got {h}")


def _sum_k(x: float, k0: int) -> float:
    """sum_{k>=k0} k x^k for 0 <= x < 1."""
    return x**k0 * (k0 - (k0 - 1) * x) / (1.0 - x) ** 2


def _sum_k2(x: float, k0: int) -> float:
    """sum_{k>=k0} k^2 x^k for 0 <= x < 1."""
    c1 = 2 * k0 * k0 - 2 * k0 - 1
    return x**k0 * (k0 * k0 - c1 * x + (k0 - 1) ** 2 * x * x) / (1.0 - x) ** 3


def _d_candidates(constants: BoundConstants, h: float) -> list[float]:
    d_min = max(min_admissible_d(constants.cbar, h), 1.0)
    candidates = [d for d in d_min * np.geomspace(1.05, 1e4, 40) if d >= 1.0]
    if constants.d > min_admissible_d(constants.cbar, h):
        candidates.append(constants.d)
    return candidates


def remainder_bound(
    h: float,
    k_max: int,
    m0: float | np.ndarray,
    t: float | np.ndarray,
    constants: BoundConstants | None = None,
) -> np.ndarray:
    """Upper bound on the part of the series beyond P[S_{k_max+1} >= t].

    The trivial bound is z^(k_max+1). With constants, the summed tail bound
    (1-z)/z [M_0 sum k z^k + C(m) D/alpha sum k^2 (alpha z)^k] over
    k >= k_max + 2 is also evaluated for a range of admissible d and the
    smallest value is kept.
    """
    _check_h(h)
    m0 = np.asarray(m0, dtype=float)
    t = np.asarray(t, dtype=float)
    if h == 0:
        return np.zeros(np.broadcast(m0, t).shape)
    z = math.exp(h)
    best = np.full(np.broadcast(m0, t).shape, z ** (k_max + 1))
    if constants is None:
        return best
    k0 = k_max + 2
    first = m0 * _sum_k(z, k0)
    for d in _d_candidates(constants, h):
        bc = constants.with_d(d)
        az = bc.alpha * z
        second = bc.Cm * decay_factor(d, t, bc.m) / bc.alpha * _sum_k2(az, k0)
        best = np.minimum(best, (1.0 - z) / z * (first + second))
    return best


def required_k_max(
    h: float,
    m0: float,
    t: float,
    tol: float,
    constants: BoundConstants | None = None,
    limit: int = K_SEARCH_LIMIT,
) -> int:
    """Smallest table depth whose remainder bound is at most ``tol``."""
    k = 0
    step = 1
    # exponential search then bisection; the bound is eventually decreasing in k
    while float(remainder_bound(h, k, m0, t, constants)) > tol:
        k += step
        step *= 2
        if k > limit:
            raise TruncationError(f"no depth up to {limit} reaches tolerance {tol:g}", limit)
    lo = max(k - step // 2, 0)
    while lo < k:
        mid = (lo + k) // 2
        if float(remainder_bound(h, mid, m0, t, constants)) <= tol:
            k = mid
        else:
            lo = mid + 1
    return k


def mgf_series_values(
    table: OccupationTable, h: float, constants: BoundConstants | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Series value and truncation bound of M(t, h) at every grid time."""
    _check_h(h)
    n = len(table.grid)
    if h == 0:
        return np.ones(n), np.zeros(n)
    z = math.exp(h)
    k = np.arange(table.k_max + 1)
    tails = table.tail_probs()
    weights = (1.0 - z) * z**k
    values = weights @ tails
    bounds = remainder_bound(h, table.k_max, table.values[0], table.grid.times, constants)
    return values, bounds


def mgf_series(
    table: OccupationTable, h: float, t: float, constants: BoundConstants | None = None
) -> MgfSeries:
    """M(t, h) for h <= 0 from the tail-probability series.

    Args:
        table: Occupation table containing t on its grid.
        h: Biasing field; h = 0 returns exactly 1.
        t: Grid time.
        constants: Bound constants enabling the sharper remainder bound.

    Returns:
        Truncated series value, a rigorous bound on the neglected remainder
        and the table depth used.

    Raises:
        ValueError: If h > 0 or t is off-grid.
    """
    i = table.grid.index_of(t)
    values, bounds = mgf_series_values(table, h, constants)
    return MgfSeries(float(values[i]), float(bounds[i]), table.k_max)


def mgf_direct(table: OccupationTable, h: float, t: float) -> float:
    """sum_k e^(hk) M_k(t) over the table rows."""
    i = table.grid.index_of(t)
    weights = np.exp(h * np.arange(table.k_max + 1))
    return float(math.fsum(weights * table.values[:, i]))


def mgf_table(
    dist: WaitingDistribution,
    grid: TimeGrid,
    hs: tuple[float, ...],
    *,
    table: OccupationTable | None = None,
    k_max: int | None = None,
    constants: BoundConstants | None = None,
    rtol: float = DEFAULT_RTOL,
    k_cap: int = K_CAP,
    atol: float = 1e-10,
    threads: int = 1,
) -> OccupationTable:
    """Build or deepen a table until every requested MGF is resolved.

    With an explicit ``k_max`` the table is built to that depth and returned
    as is. Otherwise the depth grows until the remainder bound is at most
    ``rtol`` times the series value at every grid time and every h < 0.

    Raises:
        TruncationError: If the required depth exceeds ``k_cap``.
    """
    if table is None:
        table = occupation_table(dist, grid, k_max or 0, atol=atol, threads=threads)
    if k_max is not None:
        return extend_table(table, dist, k_max, atol=atol, threads=threads)

    m0 = table.values[0]
    for h in sorted((h for h in hs if h < 0), reverse=True):
        while True:
            values, bounds = mgf_series_values(table, h, constants)
            if np.all(bounds <= rtol * values):
                break
            need = max(
                required_k_max(h, float(m0[i]), float(grid.times[i]), rtol * float(values[i]), constants)
                for i in np.flatnonzero(bounds > rtol * values)
            )
            if need > k_cap:
                raise TruncationError(
                    f"MGF at h={h} needs k_max={need}, above the cap of {k_cap}", need
                )
            if need <= table.k_max:
                # series value grew after deepening; one more row settles it
                need = table.k_max + 1
            logger.info(f"Growing occupation table to k_max={need} for h={h}")
            table = extend_table(table, dist, need, atol=atol, threads=threads)
    return table
