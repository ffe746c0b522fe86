"""Occupation probabilities M_k(t) = P[N_t = k] by convolution recursion.

M_0 is the survival function and M_1 is the integral over [0, t] of
M_0(t - s) p(s) ds against the exact survival function. Deeper rows come
from the distribution functions G_k(t) = P[S_k <= t], which satisfy the
same recursion G_{k+1} = G_k * p, as M_k = G_k - G_{k+1}. G_k is smooth and
monotone, so it interpolates well off the grid, and the row sums telescope
to 1 - G_{k_max+1} <= 1. The grid points of one row are independent
integrals and may be evaluated in parallel.
"""

from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
from typing import Literal

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline

from renewal_ld.engine.distributions import WaitingDistribution
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.quadrature import DEFAULT_ORDER, adaptive_gauss_legendre
from renewal_ld.errors import QuadratureError

logger = logging.getLogger(__name__)

Provenance = Literal["quadrature", "monte_carlo"]
Curve = np.ndarray | Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class OccupationTable:
    """Matrix of P[N_t = k] over a time grid.

    Attributes:
        grid: Observation times.
        values: Array of shape (k_max + 1, len(grid)); values[k, i] = P[N_{t_i} = k].
        provenance: Which route produced the table.
        dist_label: Label of the waiting time distribution.
    """

    grid: TimeGrid
    values: np.ndarray
    provenance: Provenance = "quadrature"
    dist_label: str = ""

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.grid):
            raise ValueError(
                f"table shape {values.shape} does not match grid of {len(self.grid)} times"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def k_max(self) -> int:
        """Deepest count held."""
        return self.values.shape[0] - 1

    def row(self, k: int) -> np.ndarray:
        """M_k over the grid."""
        return self.values[k]

    def column(self, t: float) -> np.ndarray:
        """M_0(t)..M_{k_max}(t) at a grid time.

        Raises:
            ValueError: If t is not a grid point.
        """
        return self.values[:, self.grid.index_of(t)]

    def deficit(self) -> np.ndarray:
        """1 - sum_k M_k(t) per grid time; estimates P[N_t > k_max]."""
        return 1.0 - self.values.sum(axis=0)

    def tail_probs(self) -> np.ndarray:
        """P[S_k >= t] for k = 1..k_max+1, shape (k_max + 1, len(grid))."""
        return np.cumsum(self.values, axis=0)

    def to_frame(self) -> pd.DataFrame:
        k_idx, t_idx = np.meshgrid(
            np.arange(self.k_max + 1), np.arange(len(self.grid)), indexing="xy"
        )
        return pd.DataFrame(
            {
                "t": self.grid.times[t_idx.ravel()],
                "k": k_idx.ravel(),
                "prob": self.values.T.ravel(),
            }
        )


def _curve_function(prev: Curve, grid: TimeGrid) -> Callable[[np.ndarray], np.ndarray]:
    if callable(prev):
        return prev
    values = np.asarray(prev, dtype=float)
    if values.shape != (len(grid),):
        raise ValueError(f"curve has shape {values.shape}, grid has {len(grid)} points")
    # cubic spline in log-time; log1p keeps t=0 on the axis
    interp = CubicSpline(np.log1p(grid.times), values, extrapolate=True)

    def evaluate(t: np.ndarray) -> np.ndarray:
        return np.clip(interp(np.log1p(np.clip(t, 0.0, None))), 0.0, 1.0)

    return evaluate


def convolve_step(
    prev: Curve,
    dist: WaitingDistribution,
    grid: TimeGrid,
    *,
    atol: float = 1e-10,
    order: int = DEFAULT_ORDER,
    threads: int = 1,
) -> np.ndarray:
    """Compute M_k on the grid from M_{k-1}.

    The map is the convolution with the waiting density, so it also takes
    G_k = P[S_k <= t] to G_{k+1}.

    Args:
        prev: M_{k-1} sampled on the grid, or a callable giving it exactly.
        dist: Waiting time distribution supplying the density.
        grid: Time grid.
        atol: Absolute tolerance per integral.
        order: Gauss-Legendre order per panel.
        threads: Worker threads across grid points.

    Returns:
        M_k at every grid time, clipped to [0, 1].

    Raises:
        QuadratureError: With the offending t if an integral fails to converge.
    """
    if len(grid) == 1:
        return np.zeros(1)
    prev_fn = _curve_function(prev, grid)

    def integrate(i: int) -> float:
        t = float(grid.times[i])
        if t == 0.0:
            return 0.0

        def integrand(s: np.ndarray) -> np.ndarray:
            return prev_fn(t - s) * dist.pdf(s)

        try:
            result = adaptive_gauss_legendre(
                integrand, 0.0, t, atol=atol, order=order, breakpoints=(0.5 * t,)
            )
        except QuadratureError as e:
            raise QuadratureError(
                f"convolution integral did not converge at t={t}: {e}",
                t=t,
                error_estimate=e.error_estimate,
            ) from e
        return result.value

    indices = range(len(grid))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(integrate, indices))
    else:
        out = [integrate(i) for i in indices]
    return np.clip(np.asarray(out), 0.0, 1.0)


def occupation_table(
    dist: WaitingDistribution,
    grid: TimeGrid,
    k_max: int,
    *,
    atol: float = 1e-10,
    threads: int = 1,
) -> OccupationTable:
    """Build M_0..M_{k_max} on the grid by iterated convolution.

    M_1 is convolved against the exact survival function; deeper rows are
    differences of interpolated distribution functions of S_k.

    Args:
        dist: Waiting time distribution.
        grid: Time grid.
        k_max: Deepest row.
        atol: Absolute tolerance per integral.
        threads: Worker threads across grid points.

    Returns:
        OccupationTable with k_max + 1 rows.
    """
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    rows = [np.asarray(dist.survival(grid.times), dtype=float)]
    table = OccupationTable(grid, np.vstack(rows), "quadrature", dist.label)
    return extend_table(table, dist, k_max, atol=atol, threads=threads)


def extend_table(
    table: OccupationTable,
    dist: WaitingDistribution,
    k_max: int,
    *,
    atol: float = 1e-10,
    threads: int = 1,
) -> OccupationTable:
    """Continue the recursion of a quadrature table up to depth k_max."""
    if table.provenance != "quadrature":
        raise ValueError("only quadrature tables can be extended")
    if k_max <= table.k_max:
        return table
    rows = list(table.values)
    grid = table.grid
    for k in range(table.k_max + 1, k_max + 1):
        if k == 1:
            rows.append(convolve_step(dist.survival, dist, grid, atol=atol, threads=threads))
        else:
            # G_k = P[S_k <= t] is what the rows so far leave over
            g_k = np.clip(1.0 - np.sum(rows, axis=0), 0.0, 1.0)
            g_next = convolve_step(g_k, dist, grid, atol=atol, threads=threads)
            rows.append(g_k - np.minimum(g_next, g_k))
        logger.debug(f"Built occupation row k={k} for {dist.label}")
    logger.info(
        f"Occupation table for {dist.label}: k_max={k_max}, {len(grid)} grid times"
    )
    return OccupationTable(grid, np.vstack(rows), "quadrature", dist.label)


def tail_prob_Sk(table: OccupationTable, k: int, t: float) -> float:  # noqa: N802
    """P[S_k >= t] = sum_{j<k} M_j(t).

    Raises:
        ValueError: If k < 1, k - 1 exceeds the table depth, or t is off-grid.
    """
    if k < 1 or k - 1 > table.k_max:
        raise ValueError(f"k={k} outside table range 1..{table.k_max + 1}")
    i = table.grid.index_of(t)
    return float(np.sum(table.values[:k, i]))
