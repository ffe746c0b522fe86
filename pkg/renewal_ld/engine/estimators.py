"""Estimators over a CountHistogram.

Counts are exact integers; probabilities and moments are formed here, once,
from the per-time count rows.
"""

import logging
import math

import numpy as np

from renewal_ld.engine.curves import CurveSeries
from renewal_ld.engine.simulation import CountHistogram
from renewal_ld.models import Estimate

logger = logging.getLogger(__name__)

HEAVY_TAIL_FLAG = "heavy-tail unreliable"
NO_EVENTS_FLAG = "no_events"
UNRESOLVED_FLAG = "unresolved"
# fewest event-free trajectories for which M(t, h < 0) is trusted
MIN_RESOLVED_EMPTY = 100


def _binomial(count: int, n: int, flag: str | None = None) -> Estimate:
    p = count / n
    return Estimate(value=p, stderr=math.sqrt(p * (1.0 - p) / n), n=n, flag=flag)


def estimate_pmf(hist: CountHistogram, t_index: int) -> list[tuple[int, Estimate]]:
    """P[N_t = k] for every k held by the histogram, with binomial stderr."""
    row = hist.row(t_index)
    return [(k, _binomial(int(c), hist.n_traj)) for k, c in enumerate(row)]


def estimate_mgf(hist: CountHistogram, t_index: int, h: float) -> Estimate:
    """Sample mean of exp(h N_t) with its standard error.

    h = 0 gives exactly 1 with zero stderr. Positive h is computed but flagged,
    since heavy-tailed counts make the estimate unreliable. For h < 0 the value
    is carried by the event-free trajectories, so fewer than
    MIN_RESOLVED_EMPTY of them marks the point unresolved.
    """
    n = hist.n_traj
    if h == 0:
        return Estimate(value=1.0, stderr=0.0, n=n)
    row = hist.row(t_index).astype(float)
    weights = np.exp(h * np.arange(row.size))
    mean = float(np.dot(row, weights)) / n
    var = float(np.dot(row, (weights - mean) ** 2)) / (n - 1) if n > 1 else 0.0
    flag = None
    if h > 0:
        flag = HEAVY_TAIL_FLAG
    elif row[0] < MIN_RESOLVED_EMPTY:
        flag = UNRESOLVED_FLAG
    return Estimate(value=mean, stderr=math.sqrt(var / n), n=n, flag=flag)


def estimate_tail(hist: CountHistogram, t_index: int, x: float) -> Estimate:
    """P[N_t < x t] with binomial stderr; flags an empty event set."""
    if not x > 0:
        raise ValueError(f"x must be > 0, got {x}")
    t = float(hist.grid.times[t_index])
    row = hist.row(t_index)
    below = int(row[np.arange(row.size) < x * t].sum())
    return _binomial(below, hist.n_traj, NO_EVENTS_FLAG if below == 0 else None)


def mgf_curve(hist: CountHistogram, h: float, dist_label: str = "") -> CurveSeries:
    """Monte Carlo M(t, h) over all grid times.

    Points with too few event-free trajectories get 1 in the ``unresolved``
    column, and their number is recorded in the metadata.
    """
    estimates = [estimate_mgf(hist, i, h) for i in range(len(hist.grid))]
    unresolved = np.array([e.flag == UNRESOLVED_FLAG for e in estimates])
    metadata = {
        "dist": dist_label,
        "h": h,
        "provenance": "monte_carlo",
        "n_traj": hist.n_traj,
        "unresolved": int(unresolved.sum()),
    }
    if h > 0:
        metadata["flag"] = HEAVY_TAIL_FLAG
        logger.warning(f"MGF at h={h} > 0 is {HEAVY_TAIL_FLAG} for heavy-tailed waiting times")
    elif unresolved.any():
        t_first = float(hist.grid.times[np.argmax(unresolved)])
        logger.warning(
            f"MGF at h={h}: {unresolved.sum()} grid times from t={t_first:g} have fewer than "
            f"{MIN_RESOLVED_EMPTY} event-free trajectories"
        )
    return CurveSeries(
        f"mgf_h{h:g}",
        hist.grid.times,
        np.array([e.value for e in estimates]),
        np.array([e.stderr for e in estimates]),
        metadata,
        "t",
        {"unresolved": unresolved.astype(float)},
    )


def tail_curve(hist: CountHistogram, x: float, dist_label: str = "") -> CurveSeries:
    """Monte Carlo P[N_t < x t] over the positive grid times."""
    idx = hist.grid.positive
    estimates = [estimate_tail(hist, int(i), x) for i in idx]
    empty = sum(e.flag == NO_EVENTS_FLAG for e in estimates)
    if empty:
        logger.warning(f"Tail curve x={x:g}: {empty} grid times with no events")
    return CurveSeries(
        f"tail_x{x:g}",
        hist.grid.times[idx],
        np.array([e.value for e in estimates]),
        np.array([e.stderr for e in estimates]),
        {
            "dist": dist_label,
            "x": x,
            "provenance": "monte_carlo",
            "n_traj": hist.n_traj,
            "no_events": int(empty),
        },
    )
