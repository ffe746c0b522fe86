"""Waiting time distributions with exact density, cdf, survival and sampling.

All methods accept a scalar or an array and return the same shape. Values
are immutable after construction; the uniform variate is an input, so no
generator state lives here.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from renewal_ld.models import (
    DistributionSpec,
    InverseRayleighSpec,
    LogNormalSpec,
    ParetoSpec,
)

ArrayLike = float | np.ndarray


def _as_array(t: ArrayLike) -> tuple[np.ndarray, bool]:
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def _finish(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


def uniform_open(rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
    """Draw uniforms on the open interval (0, 1).

    Exact zeros are rejected and redrawn from the same generator, so the
    draw sequence stays a deterministic function of the generator state.
    """
    u = rng.random(size)
    mask = u == 0.0
    while mask.any():
        u[mask] = rng.random(int(mask.sum()))
        mask = u == 0.0
    return u


class WaitingDistribution(ABC):
    """Positive waiting time distribution."""

    family: str

    @abstractmethod
    def pdf(self, t: ArrayLike) -> ArrayLike:
        """Density; zero for t <= 0."""

    @abstractmethod
    def cdf(self, t: ArrayLike) -> ArrayLike:
        """P[tau <= t]; zero for t <= 0."""

    @abstractmethod
    def survival(self, t: ArrayLike) -> ArrayLike:
        """M0(t) = P[tau > t]; one for t <= 0."""

    @abstractmethod
    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def mean(self) -> float:
        """E[tau]."""

    @property
    @abstractmethod
    def tail_exponent(self) -> float | None:
        """Exponent m with survival ~ t^-(m-1), or None if not regularly varying."""

    @abstractmethod
    def to_spec(self) -> DistributionSpec:
        """Config representation."""

    @property
    def mean_rate(self) -> float:
        """mu = 1/E[tau]."""
        return 1.0 / self.mean()

    def sample(self, u: ArrayLike) -> ArrayLike:
        """Inverse-cdf transform of uniform variates.

        Args:
            u: Variates in the open interval (0, 1).

        Returns:
            F^-1(u).

        Raises:
            ValueError: If any u lies outside (0, 1).
        """
        arr, scalar = _as_array(u)
        if np.any((arr <= 0.0) | (arr >= 1.0)) or np.any(np.isnan(arr)):
            raise ValueError(f"uniform variate must lie in (0, 1), got {u}")
        return _finish(self._inverse_cdf(arr), scalar)

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        """Draw i.i.d. waiting times from a generator."""
        return self._inverse_cdf(uniform_open(rng, size))

    @property
    def label(self) -> str:
        params = ",".join(
            f"{k}={v:g}" for k, v in self.to_spec().model_dump().items() if k != "family"
        )
        return f"{self.family}({params})"


@dataclass(frozen=True)
class Pareto(WaitingDistribution):
    """Pareto law with density (m-1)/(1+t)^m on t > 0."""

    m: float
    family = "pareto"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.m) and self.m > 2.0):
            raise ValueError(f"Pareto requires m > 2, got {self.m}")

    def pdf(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos = arr > 0.0
        safe = np.where(pos, arr, 0.0)
        out = np.where(pos, (self.m - 1.0) * np.power(1.0 + safe, -self.m), 0.0)
        return _finish(out, scalar)

    def cdf(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos = arr > 0.0
        safe = np.where(pos, arr, 0.0)
        out = np.where(pos, -np.expm1(-(self.m - 1.0) * np.log1p(safe)), 0.0)
        return _finish(out, scalar)

    def survival(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        safe = np.where(arr > 0.0, arr, 0.0)
        out = np.power(1.0 + safe, -(self.m - 1.0))
        return _finish(out, scalar)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        return np.expm1(-np.log1p(-u) / (self.m - 1.0))

    def mean(self) -> float:
        return 1.0 / (self.m - 2.0)

    @property
    def tail_exponent(self) -> float:
        return self.m

    @property
    def integer_m(self) -> int | None:
        """m as an int when it is integral, else None."""
        return int(self.m) if float(self.m).is_integer() else None

    def to_spec(self) -> ParetoSpec:
        return ParetoSpec(m=self.m)


@dataclass(frozen=True)
class InverseRayleigh(WaitingDistribution):
    """Inverse Rayleigh law with cdf exp(-beta/(2t^2)) on t > 0."""

    beta: float
    family = "inv_rayleigh"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0.0):
            raise ValueError(f"InverseRayleigh requires beta > 0, got {self.beta}")

    def _exponent(self, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos = arr > 0.0
        safe = np.where(pos, arr, 1.0)
        return pos, self.beta / (2.0 * safe * safe)

    def pdf(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos, x = self._exponent(arr)
        safe = np.where(pos, arr, 1.0)
        # log form: beta/t^3 overflows long before exp(-x) underflows
        out = np.where(pos, np.exp(math.log(self.beta) - 3.0 * np.log(safe) - x), 0.0)
        return _finish(out, scalar)

    def cdf(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos, x = self._exponent(arr)
        return _finish(np.where(pos, np.exp(-x), 0.0), scalar)

    def survival(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos, x = self._exponent(arr)
        return _finish(np.where(pos, -np.expm1(-x), 1.0), scalar)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        return np.sqrt(self.beta / (-2.0 * np.log(u)))

    def mean(self) -> float:
        return math.sqrt(math.pi * self.beta / 2.0)

    @property
    def tail_exponent(self) -> float:
        # survival ~ beta/(2 t^2)
        return 3.0

    def to_spec(self) -> InverseRayleighSpec:
        return InverseRayleighSpec(beta=self.beta)


@dataclass(frozen=True)
class LogNormal(WaitingDistribution):
    """Log-normal law; log(tau) ~ Normal(mu, sigma^2)."""

    mu: float
    sigma: float
    family = "lognormal"

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma > 0.0) or not math.isfinite(self.mu):
            raise ValueError(f"LogNormal requires finite mu and sigma > 0, got {self.mu}, {self.sigma}")

    def _z(self, arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos = arr > 0.0
        safe = np.where(pos, arr, 1.0)
        return pos, (np.log(safe) - self.mu) / (math.sqrt(2.0) * self.sigma)

    def pdf(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos, z = self._z(arr)
        safe = np.where(pos, arr, 1.0)
        dens = np.exp(-z * z) / (math.sqrt(2.0 * math.pi) * self.sigma * safe)
        return _finish(np.where(pos, dens, 0.0), scalar)

    def cdf(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos, z = self._z(arr)
        return _finish(np.where(pos, 0.5 * special.erfc(-z), 0.0), scalar)

    def survival(self, t: ArrayLike) -> ArrayLike:
        arr, scalar = _as_array(t)
        pos, z = self._z(arr)
        return _finish(np.where(pos, 0.5 * special.erfc(z), 1.0), scalar)

    def _inverse_cdf(self, u: np.ndarray) -> np.ndarray:
        return np.exp(self.mu + self.sigma * special.ndtri(u))

    def draw(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        return np.exp(self.mu + self.sigma * rng.standard_normal(size))

    def mean(self) -> float:
        return math.exp(self.mu + 0.5 * self.sigma**2)

    @property
    def tail_exponent(self) -> None:
        return None

    def to_spec(self) -> LogNormalSpec:
        return LogNormalSpec(mu=self.mu, sigma=self.sigma)


def from_spec(spec: DistributionSpec) -> WaitingDistribution:
    """Build a distribution from its config representation."""
    if isinstance(spec, ParetoSpec):
        return Pareto(m=spec.m)
    if isinstance(spec, InverseRayleighSpec):
        return InverseRayleigh(beta=spec.beta)
    if isinstance(spec, LogNormalSpec):
        return LogNormal(mu=spec.mu, sigma=spec.sigma)
    raise TypeError(f"Unknown distribution spec: {spec!r}")
