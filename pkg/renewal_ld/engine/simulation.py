"""Monte Carlo simulation of the renewal counting process on a time grid.

Trajectories are grouped in fixed blocks of BLOCK_SIZE. Block b draws its
waiting times from a Philox substream keyed by (seed, b), always a full
block of columns per round, so trajectory j sees the same waiting times
whatever batch it is simulated in. Batches are contiguous trajectory
ranges; a batch that starts or ends inside a block regenerates that block
and keeps only its own columns. Output therefore depends on
(dist, grid, n_traj, seed) only.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import logging
import math

import numpy as np
import pandas as pd

from renewal_ld.engine.distributions import WaitingDistribution, from_spec
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.models import SimulationConfig

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1024
CHUNK_ROUNDS = 32


@dataclass(frozen=True, eq=False)
class CountHistogram:
    """Exact trajectory counts of N_t per grid time.

    Attributes:
        grid: Observation times.
        counts: Integer array of shape (len(grid), k_max + 1); counts[i, k] is
            the number of trajectories with N_{t_i} = k.
        n_traj: Number of trajectories.
    """

    grid: TimeGrid
    counts: np.ndarray
    n_traj: int

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != len(self.grid):
            raise ValueError(f"counts shape {counts.shape} does not match grid of {len(self.grid)}")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(counts.sum(axis=1) != self.n_traj):
            raise ValueError(f"every grid time must account for all {self.n_traj} trajectories")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def empty(cls, grid: TimeGrid) -> "CountHistogram":
        return cls(grid, np.zeros((len(grid), 1), dtype=np.int64), 0)

    @property
    def k_max(self) -> int:
        """Largest count column held (not necessarily observed)."""
        return self.counts.shape[1] - 1

    def row(self, t_index: int) -> np.ndarray:
        return self.counts[t_index]

    def merge(self, other: "CountHistogram") -> "CountHistogram":
        """Add the counts of another histogram over the same grid."""
        if not np.array_equal(self.grid.times, other.grid.times):
            raise ValueError("cannot merge histograms over different grids")
        width = max(self.counts.shape[1], other.counts.shape[1])
        merged = np.zeros((len(self.grid), width), dtype=np.int64)
        merged[:, : self.counts.shape[1]] += self.counts
        merged[:, : other.counts.shape[1]] += other.counts
        return CountHistogram(self.grid, merged, self.n_traj + other.n_traj)

    def to_frame(self) -> pd.DataFrame:
        """Long form with columns t, k, count; zero cells are omitted."""
        i, k = np.nonzero(self.counts)
        return pd.DataFrame({"t": self.grid.times[i], "k": k, "count": self.counts[i, k]})


def substream(seed: int, block: int) -> np.random.Generator:
    """Counter-based generator owned by one trajectory block."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _simulate_block(
    dist: WaitingDistribution,
    times: np.ndarray,
    seed: int,
    block: int,
    columns: slice,
) -> np.ndarray:
    """N_t for the selected columns of one block, shape (len(times), n_cols)."""
    rng = substream(seed, block)
    n_cols = columns.stop - columns.start
    n_times = times.size
    t_max = times[-1]
    s = np.zeros(n_cols)
    # hits[i, j]: renewals of column j whose epoch first fits at grid index i
    hits = np.zeros((n_times + 1) * n_cols, dtype=np.int64)
    col_ids = np.arange(n_cols)
    active = np.ones(n_cols, dtype=bool)
    while active.any():
        waits = dist.draw(rng, (CHUNK_ROUNDS, BLOCK_SIZE))[:, columns]
        idx = np.flatnonzero(active)
        epochs = s[idx] + np.cumsum(waits[:, idx], axis=0)
        first = np.searchsorted(times, epochs, side="left")
        keep = first < n_times
        hits += np.bincount(
            (first[keep] * n_cols + np.broadcast_to(col_ids[idx], first.shape)[keep]),
            minlength=(n_times + 1) * n_cols,
        )
        s[idx] = epochs[-1]
        active[idx] = epochs[-1] <= t_max
    return np.cumsum(hits.reshape(n_times + 1, n_cols)[:n_times], axis=0)


def _histogram(n: np.ndarray) -> np.ndarray:
    n_times, _ = n.shape
    width = int(n.max()) + 1 if n.size else 1
    flat = np.arange(n_times)[:, None] * width + n
    return np.bincount(flat.ravel(), minlength=n_times * width).reshape(n_times, width)


def simulate_batch(
    dist: WaitingDistribution, grid: TimeGrid, seed: int, start: int, stop: int
) -> CountHistogram:
    """Histogram of trajectories start..stop-1."""
    times = np.asarray(grid.times)
    result = CountHistogram.empty(grid)
    first_block = start // BLOCK_SIZE
    last_block = (stop - 1) // BLOCK_SIZE
    for block in range(first_block, last_block + 1):
        lo = max(start, block * BLOCK_SIZE) - block * BLOCK_SIZE
        hi = min(stop, (block + 1) * BLOCK_SIZE) - block * BLOCK_SIZE
        counts = _simulate_block(dist, times, seed, block, slice(lo, hi))
        result = result.merge(CountHistogram(grid, _histogram(counts), hi - lo))
    return result


def simulate(
    dist: WaitingDistribution,
    grid: TimeGrid,
    n_traj: int,
    seed: int,
    *,
    batch_size: int = 65536,
    threads: int = 1,
) -> CountHistogram:
    """Simulate n_traj trajectories and count renewals at every grid time.

    Args:
        dist: Waiting time distribution.
        grid: Observation times.
        n_traj: Number of trajectories.
        seed: 64-bit base seed.
        batch_size: Trajectories per batch.
        threads: Batches run concurrently on this many threads.

    Returns:
        Merged histogram; identical for any batch_size and thread count.
    """
    if n_traj < 1 or batch_size < 1:
        raise ValueError(f"n_traj and batch_size must be >= 1, got {n_traj}, {batch_size}")
    n_batches = math.ceil(n_traj / batch_size)
    ranges = [(b * batch_size, min((b + 1) * batch_size, n_traj)) for b in range(n_batches)]

    def run(bounds: tuple[int, int]) -> CountHistogram:
        return simulate_batch(dist, grid, seed, *bounds)

    logger.info(
        f"Simulating {n_traj} trajectories of {dist.label} in {n_batches} batches "
        f"(threads={threads}, t_max={grid.t_max:g})"
    )
    if threads > 1 and n_batches > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, ranges))
    else:
        parts = [run(r) for r in ranges]

    # canonical merge in batch order
    hist = CountHistogram.empty(grid)
    for part in parts:
        hist = hist.merge(part)
    return hist


def simulate_counts(cfg: SimulationConfig, threads: int = 1) -> CountHistogram:
    """Run the simulation described by a SimulationConfig."""
    return simulate(
        from_spec(cfg.dist),
        TimeGrid.from_spec(cfg.grid),
        cfg.n_traj,
        cfg.seed,
        batch_size=cfg.batch_size,
        threads=threads,
    )
