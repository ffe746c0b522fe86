"""Time grids shared by the quadrature and Monte Carlo routes."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from renewal_ld.models import GridSpec

GridStyle = Literal["uniform", "logarithmic", "explicit"]


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Ordered observation times starting at t=0.

    Attributes:
        times: Strictly increasing finite times with times[0] == 0.
        style: How the positive times were spaced.
        resolution: Parameters the grid was built from.
    """

    times: np.ndarray
    style: GridStyle = "explicit"
    resolution: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("time grid must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(times)):
            raise ValueError("time grid must be finite")
        if times[0] != 0.0:
            raise ValueError(f"time grid must start at 0, got {times[0]}")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("time grid must be strictly increasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @classmethod
    def logarithmic(
        cls, t_min: float, t_max: float, points: int, extra: tuple[float, ...] = ()
    ) -> "TimeGrid":
        """0 followed by ``points`` log-spaced times in [t_min, t_max]."""
        positive = np.geomspace(t_min, t_max, points) if points > 1 else np.array([t_max])
        return cls(
            _merge(positive, extra),
            "logarithmic",
            {"t_min": t_min, "t_max": t_max, "points": points, "extra": list(extra)},
        )

    @classmethod
    def uniform(
        cls, t_min: float, t_max: float, points: int, extra: tuple[float, ...] = ()
    ) -> "TimeGrid":
        """0 followed by ``points`` evenly spaced times in [t_min, t_max]."""
        positive = np.linspace(t_min, t_max, points) if points > 1 else np.array([t_max])
        return cls(
            _merge(positive, extra),
            "uniform",
            {"t_min": t_min, "t_max": t_max, "points": points, "extra": list(extra)},
        )

    @classmethod
    def from_spec(cls, spec: GridSpec) -> "TimeGrid":
        """Build the grid a config describes.

        Args:
            spec: Validated grid specification.

        Returns:
            Logarithmic or uniform grid with the extra times merged in.
        """
        build = cls.logarithmic if spec.style == "logarithmic" else cls.uniform
        return build(spec.t_min, spec.t_max, spec.points, spec.extra_times)

    @classmethod
    def from_times(cls, times) -> "TimeGrid":
        """Grid through the given times, with 0 prepended if missing."""
        return cls(_merge(np.asarray(times, dtype=float), ()), "explicit", {})

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def t_max(self) -> float:
        return float(self.times[-1])

    @property
    def positive(self) -> np.ndarray:
        """Indices of the strictly positive times."""
        return np.arange(1, len(self))

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        """Index of a grid time.

        Raises:
            ValueError: If t is not on the grid.
        """
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > rtol * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not on the time grid")
        return i

    def describe(self) -> dict:
        """Summary for run records.

        Returns:
            Dict with the style, the actual number of grid times (t=0
            included), the first positive time, t_max, and the parameters
            the grid was built from under ``resolution``.
        """
        return {
            "style": self.style,
            "points": len(self),
            "t_first_positive": float(self.times[1]) if len(self) > 1 else None,
            "t_max": self.t_max,
            "resolution": dict(self.resolution),
        }


def _merge(positive: np.ndarray, extra: tuple[float, ...]) -> np.ndarray:
    merged = np.unique(np.concatenate([[0.0], positive, np.asarray(extra, dtype=float)]))
    return merged[merged >= 0.0]
