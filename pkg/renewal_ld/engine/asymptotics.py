"""Derived large-deviation quantities and the tail-asymptotic regression.

All functions map immutable curves to new curves; nothing is modified in
place.
"""

from collections.abc import Sequence
import logging

import numpy as np

from renewal_ld.engine.curves import CurveSeries
from renewal_ld.engine.distributions import WaitingDistribution
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.series import thm1_limit
from renewal_ld.errors import InsufficientDataError
from renewal_ld.models import Estimate, FitOptions, TailFit

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3
PLATEAU_THRESHOLD = 0.01


def finite_cgf(mgf: CurveSeries) -> CurveSeries:
    """phi_t(h) = log M(t, h) / t at every t > 0 with a positive MGF value.

    Nonpositive values are dropped and their number is recorded under
    ``dropped`` in the metadata. Extra columns follow the kept points.
    """
    positive_t = mgf.x > 0
    usable = positive_t & (mgf.values > 0)
    dropped = int(np.count_nonzero(positive_t & ~usable))
    if dropped:
        logger.warning(f"CGF from '{mgf.name}': dropped {dropped} nonpositive MGF values")
    sub = mgf.select(usable)
    t = sub.x
    stderr = None if sub.stderr is None else sub.stderr / (t * sub.values)
    return CurveSeries(
        mgf.name.replace("mgf", "cgf", 1),
        t,
        np.log(sub.values) / t,
        stderr,
        {**mgf.metadata, "dropped": dropped},
        "t",
        dict(sub.extra),
    )


def finite_rate(
    pmf: Sequence[tuple[int, Estimate]], t: float, name: str = "rate"
) -> tuple[CurveSeries, CurveSeries]:
    """Finite-time rate function i_t(k/t) = -log P[N_t = k] / t.

    Args:
        pmf: (k, estimate) pairs, k increasing.
        t: Observation time, > 0.
        name: Stem of the returned curve names.

    Returns:
        The raw curve and the curve shifted so that its minimum is exactly 0.
        Zero-probability bins are omitted and counted under ``omitted``.
    """
    if not t > 0:
        raise ValueError(f"rate function needs t > 0, got {t}")
    kept = [(k, e) for k, e in pmf if e.value > 0]
    omitted = len(pmf) - len(kept)
    if not kept:
        raise InsufficientDataError(f"no nonzero probabilities at t={t}")
    k = np.array([k for k, _ in kept], dtype=float)
    p = np.array([e.value for _, e in kept])
    se = np.array([e.stderr for _, e in kept])
    values = -np.log(p) / t
    stderr = se / (t * p)
    metadata = {"t": t, "omitted": omitted}
    raw = CurveSeries(name, k / t, values, stderr, metadata, "x")
    shifted = CurveSeries(f"{name}_shifted", k / t, values - values.min(), stderr, metadata, "x")
    return raw, shifted


def plateau_width(shifted: CurveSeries, threshold: float = PLATEAU_THRESHOLD) -> float:
    """Width in x of the points of a shifted rate curve below ``threshold``."""
    near = shifted.x[shifted.values < threshold]
    return float(near.max() - near.min()) if near.size else 0.0


def ratio_curve(mgf: CurveSeries, dist: WaitingDistribution) -> CurveSeries:
    """M(t, h)/M_0(t), with ratio_to_limit = ratio (1 - e^h) when h < 0."""
    m0 = np.asarray(dist.survival(mgf.x), dtype=float)
    ratio = mgf.values / m0
    stderr = None if mgf.stderr is None else mgf.stderr / m0
    h = mgf.metadata.get("h")
    extra = {}
    if h is not None and h < 0:
        extra["ratio_to_limit"] = ratio / thm1_limit(h)
    return CurveSeries(
        mgf.name.replace("mgf", "ratio", 1), mgf.x, ratio, stderr, dict(mgf.metadata), "t", extra
    )


def floor_bound_curve(dist: WaitingDistribution, grid: TimeGrid, x: float) -> CurveSeries:
    """floor(x t) M_0(t) at grid times where floor(x t) >= 1.

    Its logarithm behaves like log M_0(t) + log(x t), the single-big-jump
    lower envelope of log P[N_t < x t].
    """
    t = grid.times[grid.positive]
    n = np.floor(x * t)
    keep = n >= 1
    values = n[keep] * np.asarray(dist.survival(t[keep]), dtype=float)
    return CurveSeries(
        f"floor_bound_x{x:g}",
        t[keep],
        values,
        None,
        {"dist": dist.label, "x": x, "provenance": "analytic"},
    )


def choose_fit_window(
    curve: CurveSeries, max_relative_stderr: float = 0.2
) -> tuple[float, float]:
    """Largest decade of t whose points are all usable for the fit.

    A point is usable when its value is positive and, if it carries a
    standard error, the relative error is below ``max_relative_stderr``.
    """
    usable = curve.values > 0
    if curve.stderr is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            usable &= curve.stderr < max_relative_stderr * curve.values
    t = curve.x[usable]
    if t.size == 0:
        raise InsufficientDataError(f"curve '{curve.name}' has no usable points")
    t_hi = float(t.max())
    return t_hi / 10.0, t_hi


def tail_fit(
    curve: CurveSeries, dist: WaitingDistribution, options: FitOptions | None = None
) -> TailFit:
    """Fit log P[N_t < x t] = a log M_0(t) + log t + b by least squares.

    The log t coefficient is fixed at 1; with ``free_log_coefficient`` it is
    fitted as well and reported.

    Args:
        curve: P[N_t < x t] against t (probabilities, not logs).
        dist: Waiting time distribution supplying M_0.
        options: Window and mode options.

    Raises:
        InsufficientDataError: If fewer than three usable points fall in the
            window, or log M_0 is constant across it.
    """
    options = options or FitOptions()
    automatic = options.t_min is None or options.t_max is None
    lo, hi = options.t_min, options.t_max
    if automatic:
        auto_lo, auto_hi = choose_fit_window(curve, options.max_relative_stderr)
        lo = auto_lo if lo is None else lo
        hi = auto_hi if hi is None else hi

    in_window = (curve.x >= lo * (1 - 1e-12)) & (curve.x <= hi * (1 + 1e-12)) & (curve.values > 0)
    if curve.stderr is not None and automatic:
        with np.errstate(divide="ignore", invalid="ignore"):
            in_window &= curve.stderr < options.max_relative_stderr * curve.values
    t = curve.x[in_window]
    if t.size < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"tail fit needs >= {MIN_FIT_POINTS} points in [{lo:g}, {hi:g}], found {t.size}"
        )
    log_p = np.log(curve.values[in_window])
    log_t = np.log(t)
    log_m0 = np.log(np.asarray(dist.survival(t), dtype=float))
    if np.ptp(log_m0) < 1e-12:
        raise InsufficientDataError("log M0 is constant across the fit window")

    if options.free_log_coefficient:
        design = np.column_stack([log_m0, log_t, np.ones_like(t)])
        coef, *_ = np.linalg.lstsq(design, log_p, rcond=None)
        a, c, b = (float(v) for v in coef)
        target = log_p
    else:
        design = np.column_stack([log_m0, np.ones_like(t)])
        target = log_p - log_t
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        a, b = (float(v) for v in coef)
        c = 1.0
    residual = float(np.sum((design @ coef - target) ** 2))
    fit = TailFit(
        a=a,
        b=b,
        residual=residual,
        t_min=float(t.min()),
        t_max=float(t.max()),
        n_points=int(t.size),
        log_t_coefficient=c,
        free_log_coefficient=options.free_log_coefficient,
    )
    logger.info(f"Tail fit on '{curve.name}': a={a:.4f}, b={b:.4f}, points={t.size}")
    return fit


def fitted_curve(fit: TailFit, curve: CurveSeries, dist: WaitingDistribution) -> CurveSeries:
    """Data alongside the fitted model, for plotting; adds log_data and log_fit columns."""
    sub = curve.select(curve.values > 0)
    log_m0 = np.log(np.asarray(dist.survival(sub.x), dtype=float))
    log_fit = fit.a * log_m0 + fit.log_t_coefficient * np.log(sub.x) + fit.b
    in_window = (sub.x >= fit.t_min) & (sub.x <= fit.t_max)
    return CurveSeries(
        f"{curve.name}_fit",
        sub.x,
        sub.values,
        sub.stderr,
        {**curve.metadata, **fit.model_dump()},
        "t",
        {"log_data": np.log(sub.values), "log_fit": log_fit, "in_window": in_window.astype(float)},
    )


def rate_minimum(raw: CurveSeries) -> float:
    """Abscissa x at which a rate curve is smallest."""
    return float(raw.x[int(np.argmin(raw.values))])


def affine_trend(cgf_by_t: dict[float, float]) -> bool:
    """True when phi_t(h) increases with t across the given times."""
    ts = sorted(cgf_by_t)
    # NaN compares false, so a missing value fails the trend
    return all(cgf_by_t[a] < cgf_by_t[b] for a, b in zip(ts, ts[1:]))
