"""Data models for renewal-ld experiments.

This module defines Pydantic models for distribution specs, experiment
configuration, Monte Carlo estimates, bound constants, fits and
verification reports.
"""

import math
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ParetoSpec(BaseModel):
    """Pareto waiting time with density (m-1)/(1+t)^m.

    Attributes:
        family: Family tag.
        m: Tail exponent, must exceed 2 so the mean is finite.
    """

    model_config = ConfigDict(frozen=True)

    family: Literal["pareto"] = "pareto"
    m: float = Field(gt=2.0)


class InverseRayleighSpec(BaseModel):
    """Inverse Rayleigh waiting time with cdf exp(-beta/(2t^2)).

    Attributes:
        family: Family tag.
        beta: Scale parameter.
    """

    model_config = ConfigDict(frozen=True)

    family: Literal["inv_rayleigh"] = "inv_rayleigh"
    beta: float = Field(gt=0.0)


class LogNormalSpec(BaseModel):
    """Log-normal waiting time.

    Attributes:
        family: Family tag.
        mu: Log-location.
        sigma: Log-scale.
    """

    model_config = ConfigDict(frozen=True)

    family: Literal["lognormal"] = "lognormal"
    mu: float = 0.0
    sigma: float = Field(gt=0.0)


DistributionSpec = Annotated[
    ParetoSpec | InverseRayleighSpec | LogNormalSpec, Field(discriminator="family")
]


class GridSpec(BaseModel):
    """Time grid specification.

    The grid always starts at t=0, followed by ``points`` positive times
    between ``t_min`` and ``t_max`` and any ``extra_times``.

    Attributes:
        style: Spacing of the positive times.
        t_min: Smallest positive time.
        t_max: Largest time.
        points: Number of positive times.
        extra_times: Additional times merged into the grid.
    """

    model_config = ConfigDict(frozen=True)

    style: Literal["uniform", "logarithmic"] = "logarithmic"
    t_min: float = Field(default=1e-2, gt=0.0)
    t_max: float = Field(default=1e3, gt=0.0)
    points: int = Field(default=200, ge=1)
    extra_times: tuple[float, ...] = ()

    @model_validator(mode="after")
    def _check_range(self) -> "GridSpec":
        if self.points > 1 and self.t_max <= self.t_min:
            raise ValueError(f"t_max ({self.t_max}) must exceed t_min ({self.t_min})")
        for t in self.extra_times:
            if not math.isfinite(t) or t < 0:
                raise ValueError(f"extra time {t} must be finite and nonnegative")
        return self


class BoundParameters(BaseModel):
    """Optional explicit constants for bound evaluation.

    Any field left unset is estimated or chosen by the toolkit.

    Attributes:
        cbar: The constant c-bar of the integral inequality.
        Cm: The constant C(m) bounding M_1 - M_0.
        d: Shift parameter d.
    """

    cbar: float | None = Field(default=None, ge=0.0)
    Cm: float | None = Field(default=None, gt=0.0)
    d: float | None = Field(default=None, ge=1.0)


class BoundConstants(BaseModel):
    """Parameter bundle for the occupation-increment and MGF bounds.

    Attributes:
        m: Integer Pareto exponent.
        cbar: Positive constant c-bar.
        Cm: Positive constant C(m).
        d: Shift parameter, at least 1.
    """

    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=3)
    cbar: float = Field(gt=0.0)
    Cm: float = Field(gt=0.0)
    d: float = Field(ge=1.0)

    @property
    def alpha(self) -> float:
        """Growth factor 1 + cbar/d."""
        return 1.0 + self.cbar / self.d

    def with_d(self, d: float) -> "BoundConstants":
        """Return a copy with a different shift parameter."""
        return self.model_copy(update={"d": float(d)})


class Estimate(BaseModel):
    """A Monte Carlo estimate.

    Attributes:
        value: Point estimate.
        stderr: Standard error.
        n: Number of samples.
        flag: Reliability caveat, if any.
    """

    model_config = ConfigDict(frozen=True)

    value: float
    stderr: float = Field(ge=0.0)
    n: int = Field(ge=1)
    flag: str | None = None


class FitOptions(BaseModel):
    """Options for the tail-asymptotic fit.

    Attributes:
        t_min: Lower edge of the fit window, chosen automatically if unset.
        t_max: Upper edge of the fit window, chosen automatically if unset.
        max_relative_stderr: Points noisier than this are excluded from the
            automatic window.
        free_log_coefficient: Also fit the log(t) coefficient (diagnostic).
    """

    t_min: float | None = Field(default=None, gt=0.0)
    t_max: float | None = Field(default=None, gt=0.0)
    max_relative_stderr: float = Field(default=0.2, gt=0.0)
    free_log_coefficient: bool = False


class TailFit(BaseModel):
    """Least-squares fit of log P[N_t < xt] = a log M0(t) + c log t + b.

    Attributes:
        a: Coefficient of log M0(t).
        b: Intercept.
        residual: Sum of squared residuals.
        t_min: Lower edge of the fit window.
        t_max: Upper edge of the fit window.
        n_points: Number of points used.
        log_t_coefficient: Coefficient of log t (fixed at 1 unless fitted).
        free_log_coefficient: Whether the log t coefficient was fitted.
    """

    a: float
    b: float
    residual: float = Field(ge=0.0)
    t_min: float
    t_max: float
    n_points: int = Field(ge=1)
    log_t_coefficient: float = 1.0
    free_log_coefficient: bool = False


CheckName = Literal[
    "partial_fractions",
    "m1_closed_form",
    "lemma1",
    "prop1",
    "occupation_increment",
    "sn_tail",
    "thm2",
    "thm1_ratio",
    "feller",
]

BOUND_CHECKS: frozenset[str] = frozenset(
    {"partial_fractions", "m1_closed_form", "lemma1", "prop1", "occupation_increment", "sn_tail", "thm2"}
)


class ExperimentConfig(BaseModel):
    """Full description of one experiment run.

    Attributes:
        name: Run name used as a file prefix.
        distribution: Waiting time distribution.
        grid: Time grid.
        mode: Which estimation routes to run.
        h: Biasing fields for MGF/CGF curves.
        x: Fractions for tail curves; defaults to half the mean rate.
        rate_times: Times at which rate functions are written; all grid times if unset.
        n_traj: Monte Carlo trajectory count.
        seed: Base seed of the counter-based generator.
        batch_size: Trajectories per simulation batch.
        output_dir: Directory receiving artifacts.
        k_max: Quadrature table depth; grown automatically if unset.
        quad_tol: Absolute tolerance of every convolution integral.
        bounds: Optional explicit bound constants.
        checks: Enabled verification checks; automatic selection if unset.
        verification_points: Points per axis of the verification grids.
        n_max: Largest n for occupation-increment checks.
        fit: Tail fit options.
        tail_csv: Existing tail curve CSV to fit instead of simulating.
    """

    model_config = ConfigDict(extra="forbid")

    name: str = "experiment"
    distribution: DistributionSpec
    grid: GridSpec = GridSpec()
    mode: Literal["mc", "quadrature", "both"] = "mc"
    h: tuple[float, ...] = (-0.5, -1.0, -2.0)
    x: tuple[float, ...] | None = None
    rate_times: tuple[float, ...] | None = None
    n_traj: int = Field(default=1_000_000, ge=1)
    seed: int | None = Field(default=None, ge=0, lt=2**64)
    batch_size: int | None = Field(default=None, ge=1)
    output_dir: str | None = None
    k_max: int | None = Field(default=None, ge=0)
    quad_tol: float | None = Field(default=None, gt=0.0)
    bounds: BoundParameters = BoundParameters()
    checks: tuple[CheckName, ...] | None = None
    verification_points: int = Field(default=100, ge=2)
    n_max: int = Field(default=50, ge=1)
    fit: FitOptions = FitOptions()
    tail_csv: str | None = None

    @field_validator("h")
    @classmethod
    def _finite_h(cls, values: tuple[float, ...]) -> tuple[float, ...]:
        for h in values:
            if not math.isfinite(h):
                raise ValueError(f"h values must be finite, got {h}")
        return values

    @field_validator("x")
    @classmethod
    def _positive_x(cls, values: tuple[float, ...] | None) -> tuple[float, ...] | None:
        if values is not None:
            for x in values:
                if not (math.isfinite(x) and x > 0):
                    raise ValueError(f"x values must be finite and > 0, got {x}")
        return values


class SimulationConfig(BaseModel):
    """Monte Carlo simulation request.

    Attributes:
        dist: Waiting time distribution.
        grid: Observation times.
        n_traj: Number of trajectories.
        seed: 64-bit base seed.
        batch_size: Trajectories per batch.
    """

    model_config = ConfigDict(frozen=True)

    dist: DistributionSpec
    grid: GridSpec
    n_traj: int = Field(ge=1)
    seed: int = Field(ge=0, lt=2**64)
    batch_size: int = Field(default=65536, ge=1)


class CheckResult(BaseModel):
    """Outcome of one verification check.

    Attributes:
        name: Check identifier.
        passed: True/False when asserted, None when skipped or report-only.
        worst_margin: Smallest relative slack found (negative means violated).
        points: Number of grid points evaluated.
        reason: Why the check was skipped or failed.
        details: Check-specific diagnostics.
    """

    name: str
    passed: bool | None
    worst_margin: float | None = None
    points: int = 0
    reason: str | None = None
    details: dict[str, Any] = Field(default_factory=dict)


class VerificationReport(BaseModel):
    """Collection of check results for one distribution.

    Attributes:
        distribution: Distribution checked.
        constants: Bound constants used, if any.
        grid: Time grid description.
        checks: Individual results.
        version: Toolkit version.
    """

    distribution: DistributionSpec
    constants: dict[str, Any] | None = None
    grid: dict[str, Any]
    checks: list[CheckResult]
    version: str

    @property
    def passed(self) -> bool:
        """True when no asserted check failed."""
        return all(c.passed is not False for c in self.checks)
