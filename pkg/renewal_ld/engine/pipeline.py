"""Experiment pipelines behind the command line.

This module provides the SimulationPipeline, QuadraturePipeline,
FitPipeline and VerifyPipeline classes. Each takes a resolved
ExperimentConfig, computes its artifacts and writes them under the
configured output directory.
"""

import dataclasses
import logging
from pathlib import Path
import time

import numpy as np

from renewal_ld import __version__
from renewal_ld.engine import io
from renewal_ld.engine.asymptotics import (
    affine_trend,
    finite_cgf,
    finite_rate,
    fitted_curve,
    floor_bound_curve,
    plateau_width,
    rate_minimum,
    ratio_curve,
    tail_fit,
)
from renewal_ld.engine.bounds import estimate_constants, feller_ratio
from renewal_ld.engine.curves import CurveSeries
from renewal_ld.engine.distributions import Pareto, WaitingDistribution, from_spec
from renewal_ld.engine.estimators import estimate_pmf, mgf_curve, tail_curve
from renewal_ld.engine.grids import TimeGrid
from renewal_ld.engine.occupation import OccupationTable
from renewal_ld.engine.series import mgf_series_values, mgf_table
from renewal_ld.engine.simulation import CountHistogram, simulate_counts
from renewal_ld.engine.verifier import VerificationSuite
from renewal_ld.errors import ConfigError, RenewalLDError, VerificationFailure
from renewal_ld.models import (
    BoundConstants,
    Estimate,
    ExperimentConfig,
    SimulationConfig,
    VerificationReport,
)

logger = logging.getLogger(__name__)

FELLER_MAX_K = 5
# mass a table column may miss and still give a rate function
RATE_MAX_DEFICIT = 1e-6
TREND_TIMES = (10.0, 100.0, 1000.0)


class _Pipeline:
    """Shared setup: distribution, grid, output directory and sidecar config."""

    def __init__(self, config: ExperimentConfig, threads: int = 1) -> None:
        """Initialize the pipeline.

        Args:
            config: Resolved experiment configuration.
            threads: Worker threads.
        """
        if config.output_dir is None or config.seed is None:
            raise ConfigError("pipeline needs a resolved config (output_dir and seed set)")
        self.config = config
        self.threads = threads
        self.dist: WaitingDistribution = from_spec(config.distribution)
        self.grid = TimeGrid.from_spec(config.grid)
        self.out_dir = Path(config.output_dir)
        self.meta_config = config.model_dump(mode="json")
        self.written: list[Path] = []

    def _write(self, curve: CurveSeries, stem: str) -> None:
        named = dataclasses.replace(curve, name=f"{self.config.name}_{stem}")
        self.written.append(io.write_curve(named, self.out_dir, self.meta_config))

    def x_values(self) -> tuple[float, ...]:
        """Tail-curve fractions; half the mean rate when not configured."""
        return self.config.x or (0.5 * self.dist.mean_rate,)

    def rate_indices(self) -> list[int]:
        if self.config.rate_times is None:
            return [int(i) for i in self.grid.positive]
        return [self.grid.index_of(t) for t in self.config.rate_times]

    def _write_rate(
        self, pmf: list[tuple[int, Estimate]], t: float, route: str
    ) -> dict[str, float] | None:
        """Write one rate curve; returns its minimum location and plateau width."""
        try:
            raw, shifted = finite_rate(pmf, t)
        except RenewalLDError as e:
            logger.warning(f"Skipping rate function at t={t:g}: {e}")
            return None
        curve = dataclasses.replace(raw, extra={"shifted": shifted.values})
        self._write(curve, f"{route}_rate_t{t:g}")
        return {"t": t, "argmin_x": rate_minimum(raw), "plateau_width": plateau_width(shifted)}

    def _cgf_trend(self, cgf: CurveSeries) -> dict | None:
        """phi_t(h) at t = 10, 100 and 1000 where the curve has a resolved point.

        Returns None when fewer than two of those times are usable.
        """
        unresolved = cgf.extra.get("unresolved")
        points = {}
        for t in TREND_TIMES:
            try:
                value = cgf.value_at(t)
            except ValueError:
                continue
            at_t = np.isclose(cgf.x, t, rtol=1e-12, atol=0.0)
            if unresolved is not None and unresolved[at_t].any():
                logger.info(f"Leaving t={t:g} out of the CGF trend: Monte Carlo value unresolved")
                continue
            points[t] = value
        if len(points) < 2:
            return None
        return {"phi": points, "increasing": affine_trend(points)}

    def _write_mgf_family(self, mgf: CurveSeries, route: str, h: float) -> dict | None:
        cgf = finite_cgf(mgf)
        self._write(mgf, f"{route}_mgf_h{h:g}")
        self._write(cgf, f"{route}_cgf_h{h:g}")
        self._write(ratio_curve(mgf, self.dist), f"{route}_ratio_h{h:g}")
        return self._cgf_trend(cgf)

    def pareto_constants(self) -> BoundConstants | None:
        """Bound constants for integer Pareto exponents, else None.

        Explicit values in the config take precedence over estimates; an
        explicit cbar of zero leaves no valid constants.
        """
        if not isinstance(self.dist, Pareto) or self.dist.integer_m is None:
            return None
        given = self.config.bounds
        found = None
        if given.cbar is None or given.Cm is None:
            try:
                found = estimate_constants(self.dist.integer_m)
            except RenewalLDError as e:
                logger.warning(f"No bound constants, falling back to the trivial remainder: {e}")
                return None
        cbar = given.cbar if given.cbar is not None else found.cbar
        Cm = given.Cm if given.Cm is not None else found.Cm
        if cbar <= 0.0:
            logger.warning("cbar = 0 leaves no valid constants; using the trivial remainder")
            return None
        d = given.d if given.d is not None else 1.0
        return BoundConstants(m=self.dist.integer_m, cbar=cbar, Cm=Cm, d=d)


class SimulationPipeline(_Pipeline):
    """Monte Carlo route: histogram, MGF/CGF/ratio curves, rate functions, tails."""

    def simulation_config(self) -> SimulationConfig:
        return SimulationConfig(
            dist=self.config.distribution,
            grid=self.config.grid,
            n_traj=self.config.n_traj,
            seed=self.config.seed,
            batch_size=self.config.batch_size or 65536,
        )

    def simulate(self) -> CountHistogram:
        return simulate_counts(self.simulation_config(), self.threads)

    def run(self) -> list[Path]:
        """Simulate and write every Monte Carlo artifact.

        Returns:
            Paths of the CSV and JSON files written.
        """
        io.ensure_dir(self.out_dir)
        started = time.perf_counter()
        hist = self.simulate()
        elapsed = time.perf_counter() - started
        label = self.dist.label

        path = self.out_dir / f"{self.config.name}_mc_histogram.csv"
        self.written.append(io.write_frame(hist.to_frame(), path, self.meta_config))
        trends = {
            f"{h:g}": self._write_mgf_family(mgf_curve(hist, h, label), "mc", h)
            for h in self.config.h
        }
        rates = [
            self._write_rate(estimate_pmf(hist, i), float(self.grid.times[i]), "mc")
            for i in self.rate_indices()
        ]
        for x in self.x_values():
            self._write(tail_curve(hist, x, label), f"mc_tail_x{x:g}")
            self._write(floor_bound_curve(self.dist, self.grid, x), f"floor_bound_x{x:g}")

        run_meta = {
            "command": "simulate",
            "dist": label,
            "seed": self.config.seed,
            "n_traj": self.config.n_traj,
            "batch_size": self.config.batch_size,
            "threads": self.threads,
            "grid": self.grid.describe(),
            "max_count": hist.k_max,
            "cgf_trend": trends,
            "rates": [r for r in rates if r is not None],
            "wall_time_s": elapsed,
            "version": __version__,
            "config": self.meta_config,
        }
        self.written.append(io.write_json(run_meta, self.out_dir / f"{self.config.name}_mc_run.json"))
        logger.info(f"Simulation finished in {elapsed:.1f}s; {len(self.written)} files written")
        return self.written


class QuadraturePipeline(_Pipeline):
    """Convolution route: occupation table and the curves derived from it."""

    def build_table(self, constants: BoundConstants | None) -> OccupationTable:
        return mgf_table(
            self.dist,
            self.grid,
            tuple(self.config.h),
            k_max=self.config.k_max,
            constants=constants,
            atol=self.config.quad_tol or 1e-10,
            threads=self.threads,
        )

    def run(self) -> list[Path]:
        """Build the table and write the quadrature artifacts."""
        io.ensure_dir(self.out_dir)
        started = time.perf_counter()
        constants = self.pareto_constants()
        table = self.build_table(constants)
        label = self.dist.label

        path = self.out_dir / f"{self.config.name}_quad_occupation.csv"
        self.written.append(io.write_frame(table.to_frame(), path, self.meta_config))

        trends: dict[str, dict | None] = {}
        rates: list[dict[str, float] | None] = []
        for h in self.config.h:
            if h > 0:
                logger.warning(f"Skipping h={h}: the series form needs h <= 0")
                continue
            values, trunc = mgf_series_values(table, h, constants)
            mgf = CurveSeries(
                f"mgf_h{h:g}",
                self.grid.times,
                values,
                None,
                {"dist": label, "h": h, "provenance": "quadrature", "k_max": table.k_max},
                "t",
                {"truncation_bound": trunc},
            )
            trends[f"{h:g}"] = self._write_mgf_family(mgf, "quad", h)

        m_tail = self.dist.tail_exponent
        if m_tail is not None:
            t = self.grid.times[self.grid.positive]
            tails = table.tail_probs()[:, self.grid.positive]
            for k in range(1, min(FELLER_MAX_K, table.k_max + 1) + 1):
                ratio = feller_ratio(m_tail, k, t, tails[k - 1])
                curve = CurveSeries(
                    f"feller_k{k}", t, ratio, None, {"dist": label, "k": k, "m_tail": m_tail}
                )
                self._write(curve, f"quad_feller_k{k}")

        deficit = table.deficit()
        for i in self.rate_indices():
            t = float(self.grid.times[i])
            if deficit[i] > RATE_MAX_DEFICIT:
                logger.warning(
                    f"Skipping quadrature rate function at t={t:g}: table misses mass {deficit[i]:.3g}"
                )
                continue
            column = table.values[:, i]
            pmf = [(k, Estimate(value=float(p), stderr=0.0, n=1)) for k, p in enumerate(column)]
            rates.append(self._write_rate(pmf, t, "quad"))

        for x in self.x_values():
            self._write_tail(table, x)

        elapsed = time.perf_counter() - started
        run_meta = {
            "command": "quadrature",
            "dist": label,
            "k_max": table.k_max,
            "quad_tol": self.config.quad_tol,
            "constants": None if constants is None else constants.model_dump(),
            "cgf_trend": trends,
            "rates": [r for r in rates if r is not None],
            "threads": self.threads,
            "grid": self.grid.describe(),
            "wall_time_s": elapsed,
            "version": __version__,
            "config": self.meta_config,
        }
        self.written.append(
            io.write_json(run_meta, self.out_dir / f"{self.config.name}_quad_run.json")
        )
        logger.info(f"Quadrature finished in {elapsed:.1f}s with k_max={table.k_max}")
        return self.written

    def _write_tail(self, table: OccupationTable, x: float) -> None:
        """P[N_t < x t] at grid times whose count range the table covers."""
        t = self.grid.times[self.grid.positive]
        need = np.ceil(x * t).astype(int)  # counts k < x t run up to ceil(x t) - 1
        keep = need - 1 <= table.k_max
        if not keep.any():
            logger.warning(f"Quadrature table too shallow for any tail point at x={x:g}")
            return
        cum = table.tail_probs()[:, self.grid.positive]
        values = np.array(
            [cum[n - 1, j] if n >= 1 else 0.0 for j, n in enumerate(need) if keep[j]]
        )
        curve = CurveSeries(
            f"tail_x{x:g}", t[keep], values, None, {"x": x, "provenance": "quadrature"}
        )
        self._write(curve, f"quad_tail_x{x:g}")


class FitPipeline(_Pipeline):
    """Tail-asymptotic fit on a simulated or supplied tail curve."""

    def tail_curves(self) -> list[CurveSeries]:
        if self.config.tail_csv:
            return [io.read_curve(self.config.tail_csv)]
        hist = SimulationPipeline(self.config, self.threads).simulate()
        return [tail_curve(hist, x, self.dist.label) for x in self.x_values()]

    def run(self) -> list[Path]:
        """Fit every tail curve and write the fit JSON and the fitted-vs-data CSV.

        Raises:
            InsufficientDataError: If a fit window holds fewer than three points.
        """
        io.ensure_dir(self.out_dir)
        for curve in self.tail_curves():
            fit = tail_fit(curve, self.dist, self.config.fit)
            x = curve.metadata.get("x")
            stem = "tailfit" if x is None else f"tailfit_x{x:g}"
            path = self.out_dir / f"{self.config.name}_{stem}.json"
            self.written.append(io.write_model(fit, path, self.meta_config))
            self._write(fitted_curve(fit, curve, self.dist), f"{stem}_data")
            if x is not None:
                self._write(floor_bound_curve(self.dist, self.grid, x), f"floor_bound_x{x:g}")
        return self.written


class VerifyPipeline(_Pipeline):
    """Verification suite with a JSON report."""

    def run(self) -> VerificationReport:
        """Run the checks and write the report.

        Raises:
            VerificationFailure: If an asserted check failed; the report is
                written first.
        """
        io.ensure_dir(self.out_dir)
        report = VerificationSuite(self.config, self.threads).run()
        path = self.out_dir / f"{self.config.name}_verify.json"
        self.written.append(io.write_model(report, path, self.meta_config))
        if not report.passed:
            failed = [c.name for c in report.checks if c.passed is False]
            raise VerificationFailure(f"verification failed: {', '.join(failed)}")
        return report
