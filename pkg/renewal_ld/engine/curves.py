"""Named result series, the unit of every CSV the toolkit writes."""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import pandas as pd

Abscissa = Literal["t", "x"]


@dataclass(frozen=True, eq=False)
class CurveSeries:
    """Ordered (abscissa, value[, stderr]) points with metadata.

    Attributes:
        name: Identifier, also used as the CSV file stem.
        x: Strictly increasing abscissae (times or count fractions).
        values: Values at each abscissa.
        stderr: Standard errors, or None for exact curves.
        metadata: Distribution, h or x, provenance and other labels.
        abscissa: Column name of the abscissa.
        extra: Additional named columns written after the standard ones.
    """

    name: str
    x: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    abscissa: Abscissa = "t"
    extra: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or values.shape != x.shape:
            raise ValueError(f"curve '{self.name}': x and values must be equal-length 1-d arrays")
        if np.any(np.diff(x) <= 0):
            raise ValueError(f"curve '{self.name}': abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)
        if self.stderr is not None:
            stderr = np.asarray(self.stderr, dtype=float)
            if stderr.shape != x.shape:
                raise ValueError(f"curve '{self.name}': stderr length mismatch")
            if np.any(stderr < 0):
                raise ValueError(f"curve '{self.name}': stderr must be nonnegative")
            object.__setattr__(self, "stderr", stderr)
        for key, column in self.extra.items():
            if np.shape(column) != x.shape:
                raise ValueError(f"curve '{self.name}': column '{key}' length mismatch")

    def __len__(self) -> int:
        return int(self.x.size)

    def select(self, mask: np.ndarray) -> "CurveSeries":
        """Subset of the points where mask is true."""
        return CurveSeries(
            self.name,
            self.x[mask],
            self.values[mask],
            None if self.stderr is None else self.stderr[mask],
            dict(self.metadata),
            self.abscissa,
            {k: np.asarray(v)[mask] for k, v in self.extra.items()},
        )

    def value_at(self, x: float, rtol: float = 1e-12) -> float:
        """Value at an abscissa of the curve, matched to relative precision rtol.

        Raises:
            ValueError: If no point lies within rtol of x.
        """
        i = int(np.argmin(np.abs(self.x - x)))
        if abs(self.x[i] - x) > rtol * max(1.0, abs(x)):
            raise ValueError(f"{self.abscissa}={x} is not a point of curve '{self.name}'")
        return float(self.values[i])

    def to_frame(self) -> pd.DataFrame:
        data = {self.abscissa: self.x, "value": self.values}
        if self.stderr is not None:
            data["stderr"] = self.stderr
        data.update({k: np.asarray(v) for k, v in self.extra.items()})
        return pd.DataFrame(data)

    @classmethod
    def from_frame(cls, name: str, frame: pd.DataFrame, metadata: dict | None = None) -> "CurveSeries":
        """Read back a frame written by ``to_frame``."""
        abscissa = "t" if "t" in frame.columns else "x"
        if abscissa not in frame.columns or "value" not in frame.columns:
            raise ValueError(f"curve '{name}' needs a t or x column and a value column")
        stderr = frame["stderr"].to_numpy(dtype=float) if "stderr" in frame.columns else None
        extra = {
            c: frame[c].to_numpy(dtype=float)
            for c in frame.columns
            if c not in (abscissa, "value", "stderr")
        }
        return cls(
            name,
            frame[abscissa].to_numpy(dtype=float),
            frame["value"].to_numpy(dtype=float),
            stderr,
            metadata or {},
            abscissa,
            extra,
        )
