"""Numeric certification of the closed forms, bounds and limits.

Each check evaluates one inequality or identity on a verification grid and
reports its worst relative margin; a negative margin means a violation.
Bound checks need an integer Pareto exponent; the limit diagnostics run for
any family but are only asserted for Pareto waiting times.
"""

import logging
import math

import numpy as np

from renewal_ld import __version__
from renewal_ld.engine import bounds, partial_fractions
from renewal_ld.engine.distributions import Pareto, WaitingDistribution, from_spec
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.occupation import OccupationTable, occupation_table
from renewal_ld.engine.series import mgf_series_values, mgf_table, thm1_limit
from renewal_ld.errors import ConfigError, QuadratureError, RenewalLDError
from renewal_ld.models import (
    BOUND_CHECKS,
    BoundConstants,
    CheckResult,
    ExperimentConfig,
    VerificationReport,
)

logger = logging.getLogger(__name__)

PF_TOL = 1e-12
M1_TOL = 1e-8
FELLER_RTOL = 0.05
FELLER_K = 5
FELLER_EXACT_TOL = 1e-12
RATIO_RTOL = 0.02
THM2_H_RANGE = (-3.0, -0.5)

CHECK_ORDER = (
    "partial_fractions",
    "m1_closed_form",
    "lemma1",
    "prop1",
    "occupation_increment",
    "sn_tail",
    "thm2",
    "thm1_ratio",
    "feller",
)


def _summary(name: str, margins: np.ndarray, details: dict | None = None) -> CheckResult:
    margins = np.asarray(margins, dtype=float).ravel()
    worst = float(margins.min()) if margins.size else None
    passed = bool(np.all(margins >= 0.0))
    return CheckResult(
        name=name,
        passed=passed,
        worst_margin=worst,
        points=int(margins.size),
        reason=None if passed else "violated on the verification grid",
        details=details or {},
    )


def _relative_margin(bound: np.ndarray, value: np.ndarray, slack: float = 0.0) -> np.ndarray:
    """(bound + slack - value) / (bound + slack)."""
    top = np.asarray(bound, dtype=float) + slack
    return (top - np.asarray(value, dtype=float)) / top


class VerificationSuite:
    """Runs the enabled checks for one experiment configuration."""

    def __init__(self, config: ExperimentConfig, threads: int = 1) -> None:
        """Initialize the suite.

        Args:
            config: Resolved experiment configuration.
            threads: Worker threads for quadrature rows.

        Raises:
            ConfigError: If bound checks are requested for a distribution
                without an integer Pareto exponent.
        """
        self.config = config
        self.threads = threads
        self.dist: WaitingDistribution = from_spec(config.distribution)
        self.grid = TimeGrid.from_spec(config.grid)
        self.atol = config.quad_tol or 1e-10
        self.m = self.dist.integer_m if isinstance(self.dist, Pareto) else None
        if self.m is not None and self.m < 3:
            self.m = None

        requested = set(config.checks) if config.checks is not None else None
        if requested is not None and requested & BOUND_CHECKS and self.m is None:
            raise ConfigError(
                f"bound checks {sorted(requested & BOUND_CHECKS)} need a Pareto law with "
                f"integer m >= 3, got {self.dist.label}"
            )
        self.requested = requested
        self._table: OccupationTable | None = None
        self._constants: bounds.EstimatedConstants | None = None

    def enabled(self, name: str) -> bool:
        return self.requested is None or name in self.requested

    @property
    def table(self) -> OccupationTable:
        if self._table is None:
            depth = max(self.config.n_max, FELLER_K)
            self._table = occupation_table(
                self.dist, self.grid, depth, atol=self.atol, threads=self.threads
            )
        return self._table

    def constants(self) -> tuple[float, float]:
        """(cbar, C(m)), explicit values taking precedence over estimates."""
        given = self.config.bounds
        if given.cbar is not None and given.Cm is not None:
            return given.cbar, given.Cm
        if self._constants is None:
            self._constants = bounds.estimate_constants(self.m)
        cbar = given.cbar if given.cbar is not None else self._constants.cbar
        Cm = given.Cm if given.Cm is not None else self._constants.Cm
        return cbar, Cm

    def bound_constants(self, d: float = 1.0) -> BoundConstants | None:
        cbar, Cm = self.constants()
        if cbar <= 0:
            return None
        return BoundConstants(m=self.m, cbar=cbar, Cm=Cm, d=d)

    # individual checks

    def check_partial_fractions(self) -> CheckResult:
        pf = partial_fractions.partial_fraction_coeffs(self.m)
        rng = np.random.default_rng(self.config.seed or 0)
        n = self.config.verification_points
        t = np.exp(rng.uniform(math.log(1e-2), math.log(1e2), n))
        s = rng.uniform(0.0, 1.0, n) * t
        exact = 1.0 / ((1.0 + s) ** (self.m - 1) * (1.0 + t - s) ** self.m)
        rhs = np.array([pf.rhs(si, ti) for si, ti in zip(s, t)])
        err = np.abs(rhs - exact) / exact
        result = _summary(
            "partial_fractions",
            (PF_TOL - err) / PF_TOL,
            {"max_relative_error": float(err.max()), "B_m": str(pf.B[-1])},
        )
        if pf.B[-1] != 1:
            return result.model_copy(update={"passed": False, "reason": "B_m differs from 1"})
        return result

    def check_m1_closed_form(self) -> CheckResult:
        exact = partial_fractions.m1_closed_form(self.m, self.grid.times)
        err = np.abs(self.table.row(1) - exact)
        return _summary(
            "m1_closed_form", (M1_TOL - err) / M1_TOL, {"max_abs_error": float(err.max())}
        )

    def check_lemma1(self) -> CheckResult:
        cbar, _ = self.constants()
        d_axis, t_axis = bounds.verification_axes(self.config.verification_points)
        margins = np.empty((d_axis.size, t_axis.size))
        quad_gap = 0.0
        quad_failures = []
        for i, d in enumerate(d_axis):
            for j, t in enumerate(t_axis):
                check = bounds.lemma1_check(self.m, float(d), float(t), cbar)
                margins[i, j] = check.margin
                try:
                    quad = bounds.lemma1_integral(self.m, float(d), float(t))
                except QuadratureError as e:
                    quad_failures.append((float(d), float(t)))
                    logger.debug(f"lemma1 cross-check quadrature failed at d={d:g}, t={t:g}: {e}")
                    continue
                quad_gap = max(quad_gap, abs(quad - check.lhs) / check.rhs)
        if quad_failures:
            logger.warning(
                f"lemma1 cross-check quadrature failed at {len(quad_failures)} of "
                f"{margins.size} points; margins use the closed form"
            )
        worst = np.unravel_index(np.argmin(margins), margins.shape)
        return _summary(
            "lemma1",
            margins,
            {
                "cbar": cbar,
                "worst_d": float(d_axis[worst[0]]),
                "worst_t": float(t_axis[worst[1]]),
                "max_quadrature_gap": quad_gap,
                "quadrature_failures": quad_failures[:10],
                "quadrature_failure_count": len(quad_failures),
            },
        )

    def _increment_margins(self, kind: str) -> CheckResult:
        bc = self.bound_constants()
        if bc is None:
            return CheckResult(name=kind, passed=None, reason="cbar = 0 leaves no valid constants")
        d_axis, _ = bounds.verification_axes(self.config.verification_points)
        values = self.table.values
        t = self.grid.times
        m0 = values[0]
        margins = []
        for d in d_axis:
            bd = bc.with_d(float(d))
            for n in range(1, self.table.k_max + 1):
                if kind == "prop1":
                    bound, value = bounds.prop1_bound(bd, n, t), values[n] - values[n - 1]
                elif kind == "occupation_increment":
                    bound, value = bounds.occupation_increment_bound(bd, n, t, m0), values[n]
                else:
                    bound, value = bounds.sn_tail_bound(bd, n, t, m0), values[:n].sum(axis=0)
                margins.append(_relative_margin(bound, value, self.atol))
        return _summary(
            kind,
            np.concatenate(margins),
            {"n_max": self.table.k_max, "d_points": int(d_axis.size), "quad_tol": self.atol},
        )

    def check_prop1(self) -> CheckResult:
        return self._increment_margins("prop1")

    def check_occupation_increment(self) -> CheckResult:
        return self._increment_margins("occupation_increment")

    def check_sn_tail(self) -> CheckResult:
        return self._increment_margins("sn_tail")

    def check_thm2(self) -> CheckResult:
        bc = self.bound_constants()
        if bc is None:
            return CheckResult(name="thm2", passed=None, reason="cbar = 0 leaves no valid constants")
        hs = np.linspace(*THM2_H_RANGE, self.config.verification_points)
        # deepen until the series remainder is resolved at every h
        table = mgf_table(
            self.dist,
            self.grid,
            tuple(float(h) for h in hs),
            table=self.table,
            constants=bc,
            atol=self.atol,
            threads=self.threads,
        )
        m0 = table.values[0]
        margins = []
        for h in hs:
            d = max(1.0, 2.0 * bounds.min_admissible_d(bc.cbar, float(h)))
            bd = bc.with_d(d)
            values, trunc = mgf_series_values(table, float(h), bd)
            bound = bounds.thm2_bound(bd, float(h), self.grid.times, m0)
            margins.append(_relative_margin(bound, values + trunc, self.atol))
        return _summary(
            "thm2",
            np.concatenate(margins),
            {
                "h_min": float(hs[0]),
                "h_max": float(hs[-1]),
                "h_points": int(hs.size),
                "k_max": table.k_max,
            },
        )

    def check_thm1_ratio(self) -> CheckResult:
        hs = tuple(h for h in self.config.h if h < 0)
        if not hs:
            return CheckResult(name="thm1_ratio", passed=None, reason="no negative h configured")
        constants = self.bound_constants() if self.m is not None else None
        table = mgf_table(
            self.dist,
            self.grid,
            hs,
            table=self.table,
            constants=constants,
            atol=self.atol,
            threads=self.threads,
        )
        t = self.grid.t_max
        m0 = float(self.dist.survival(t))
        ratios = {}
        margins = []
        for h in hs:
            values, _ = mgf_series_values(table, h, constants)
            ratio = float(values[-1]) / m0 / thm1_limit(h)
            ratios[f"{h:g}"] = ratio
            margins.append((RATIO_RTOL - abs(ratio - 1.0)) / RATIO_RTOL)
        details = {"t": t, "ratio_to_limit": ratios, "k_max": table.k_max}
        result = _summary("thm1_ratio", np.array(margins), details)
        if not isinstance(self.dist, Pareto):
            return result.model_copy(update={"passed": None, "reason": "report only"})
        return result

    def check_feller(self) -> CheckResult:
        m_tail = self.dist.tail_exponent
        if m_tail is None:
            return CheckResult(
                name="feller", passed=None, reason=f"{self.dist.label} is not regularly varying"
            )
        t = self.grid.t_max
        tails = self.table.tail_probs()[:, -1]
        ratios = {k: float(bounds.feller_ratio(m_tail, k, t, tails[k - 1])) for k in range(1, FELLER_K + 1)}
        margins = [(FELLER_RTOL - abs(r / k - 1.0)) / FELLER_RTOL for k, r in ratios.items()]
        exact = (t / (1.0 + t)) ** (m_tail - 1.0)
        details = {"t": t, "ratios": {str(k): r for k, r in ratios.items()}}
        if isinstance(self.dist, Pareto):
            gap = abs(ratios[1] - exact)
            details["k1_exact_gap"] = gap
            margins.append((FELLER_EXACT_TOL - gap) / FELLER_EXACT_TOL)
            if self.m is None:
                dominance = bounds.noninteger_tail_dominance(self.dist.m, self.grid.times)
                details["max_tail_dominance_ratio"] = float(dominance.max())
        result = _summary("feller", np.array(margins), details)
        if not isinstance(self.dist, Pareto):
            return result.model_copy(update={"passed": None, "reason": "report only"})
        return result

    def _run_check(self, name: str) -> CheckResult:
        if name in BOUND_CHECKS and self.m is None:
            return CheckResult(
                name=name,
                passed=None,
                reason=f"needs integer Pareto m >= 3; {self.dist.label} given",
            )
        try:
            return getattr(self, f"check_{name}")()
        except RenewalLDError as e:
            logger.warning(f"Check {name} failed numerically: {e}")
            return CheckResult(name=name, passed=False, reason=f"{type(e).__name__}: {e}")

    def run(self) -> VerificationReport:
        """Run every enabled check in a fixed order."""
        results = []
        for name in CHECK_ORDER:
            if not self.enabled(name):
                continue
            result = self._run_check(name)
            level = logging.WARNING if result.passed is False else logging.INFO
            logger.log(level, f"Check {name}: passed={result.passed} worst_margin={result.worst_margin}")
            results.append(result)

        constants = None
        if self.m is not None and any(r.name in BOUND_CHECKS for r in results):
            try:
                cbar, Cm = self.constants()
            except RenewalLDError:
                cbar = Cm = None
            constants = {"m": self.m, "cbar": cbar, "Cm": Cm}
            if self._constants is not None:
                constants["search"] = self._constants.describe()
        return VerificationReport(
            distribution=self.config.distribution,
            constants=constants,
            grid=self.grid.describe(),
            checks=results,
            version=__version__,
        )
