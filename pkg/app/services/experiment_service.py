"""Experiment service running one subcommand end to end and persisting it."""

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Optional
import logging
import time

import numpy as np
import pandas as pd

import kss
from app.config import ExperimentConfig, RunParameters, SUBCOMMANDS
from kss.conditional import d_of_r_mc, second_moment_mc
from kss.exceptions import ConfigurationError, DomainError
from kss.models.run import RunRecord, RunStatus
from kss.models.spectrum import SystemSpec
from kss.moments import (
    blowup_diagnostics,
    chi_ratio_bound,
    concentration_bound,
    dbar_bound,
    ej_squared,
    expected_zero_measure,
    second_moment_atoms,
    variance_bound_table,
    variance_upper_bound_quadrature,
)
from kss.montecarlo import mean_estimate, task_int_seed
from kss.series import NONNEGATIVE_SLACK, series_check
from kss.storage import ReportStore
from kss.zerocount import NewtonOptions, empirical_moments

TableMap = dict[str, pd.DataFrame]


@dataclass
class RunOutcome:
    """A finished run with its tables and, once stored, its report path."""

    record: RunRecord
    tables: TableMap = field(default_factory=dict)
    path: Optional[Path] = None

    @property
    def flagged(self) -> bool:
        return self.record.flagged


class ExperimentService:
    """
    Runs subcommands against a ReportStore.

    Every run records the config it was given, the config hash and the
    resolved seed, so a stored report can be re-derived from itself.
    """

    def __init__(self, store: ReportStore, threads: int = 1, max_overlap: float = 0.999):
        self.logger = logging.getLogger(__name__)
        self.store = store
        self.threads = threads
        self.max_overlap = max_overlap

        self._handlers: dict[str, Callable[..., tuple[dict[str, Any], TableMap, bool]]] = {
            "expect": self._run_expect,
            "var-bound": self._run_var_bound,
            "kr2": self._run_kr2,
            "mc": self._run_mc,
            "count": self._run_count,
            "crofton": self._run_crofton,
            "series-check": self._run_series_check,
            "blowup": self._run_blowup,
        }

    def execute(self, subcommand: str, config: ExperimentConfig, seed: int) -> RunOutcome:
        """
        Run a subcommand without persisting it.

        Raises:
            ConfigurationError: If the subcommand is unknown or needs a missing system
            KSSError: Any numerical error raised by the library
        """
        if subcommand not in self._handlers:
            raise ConfigurationError("subcommand", f"unknown subcommand {subcommand!r}")

        self.logger.info(f"Running {subcommand} with seed {seed}")
        started = time.perf_counter()
        result, tables, flagged = self._handlers[subcommand](config, seed)
        wall_time = time.perf_counter() - started

        record = RunRecord(
            subcommand=subcommand,
            config=config.to_dict(),
            config_hash=config.config_hash,
            seed=seed,
            version=kss.__version__,
            wall_time=wall_time,
            result=result,
            status=RunStatus.FLAGGED if flagged else RunStatus.OK,
            tables=sorted(tables),
            created=datetime.now(),
        )
        self.logger.info(f"Finished {subcommand} in {wall_time:.2f}s")
        return RunOutcome(record=record, tables=tables)

    def run(self, subcommand: str, config: ExperimentConfig, seed: int) -> RunOutcome:
        """Run a subcommand and write its report and tables to the store."""
        outcome = self.execute(subcommand, config, seed)
        outcome.path = self.store.put(outcome.record, outcome.tables)
        if outcome.flagged:
            self.logger.warning(f"{subcommand} finished with saturated or degenerate counts")
        return outcome

    def rederive(self, subcommand: str) -> RunOutcome:
        """Re-run a stored report from its embedded config and seed (nothing is written)."""
        record = self.store.load(subcommand)
        config = ExperimentConfig.from_dict(record.config)
        if config.config_hash != record.config_hash:
            raise ConfigurationError("config_hash", "embedded config does not match its hash")
        return self.execute(subcommand, config, record.seed)

    # ------------------------------------------------------------------
    # Subcommands
    # ------------------------------------------------------------------

    @staticmethod
    def _system(config: ExperimentConfig, subcommand: str) -> SystemSpec:
        if config.system is None:
            raise ConfigurationError("system", f"{subcommand} needs a system")
        return config.system

    def _run_expect(self, config: ExperimentConfig, seed: int):
        spec = self._system(config, "expect")
        report = expected_zero_measure(spec)
        result = report.to_dict()
        result["atoms"] = second_moment_atoms(spec)
        return result, {}, False

    def _run_var_bound(self, config: ExperimentConfig, seed: int):
        spec = self._system(config, "var-bound")
        params = config.params
        bound, quadrature = variance_upper_bound_quadrature(
            spec,
            interval=params.interval,
            kind=params.quadrature,
            n_nodes=params.nodes,
            rtol=params.rtol,
        )
        first = expected_zero_measure(spec)
        result: dict[str, Any] = {
            "moments": first.to_dict(),
            "interval": list(params.interval),
            "variance_upper_bound": bound,
            "n_nodes": quadrature.rule.n_nodes,
            "converged": bool(quadrature.converged),
        }
        if params.interval == (-1.0, 1.0):
            atoms = second_moment_atoms(spec)
            result["variance_ratio_bound"] = (
                bound + atoms - first.first_moment**2
            ) / first.first_moment**2
            if spec.N >= 2:
                result["concentration_bound"] = concentration_bound(
                    spec, n_nodes=params.nodes, rtol=params.rtol
                )
        if not quadrature.converged:
            self.logger.warning("Variance bound quadrature did not reach the requested tolerance")

        table = variance_bound_table(spec, quadrature.rule.nodes)
        return result, {"var_bound": table}, False

    def _run_kr2(self, config: ExperimentConfig, seed: int):
        spec = self._system(config, "kr2")
        params = config.params
        report = second_moment_mc(
            spec,
            n_nodes=params.nodes,
            n_samples_per_node=params.samples_per_node,
            seed=seed,
            kind=params.quadrature,
            threads=self.threads,
            interval=params.interval,
        )
        tables = {"kr2": report.to_dataframe()}
        if params.probes:
            tables["probes"] = self._probe_table(spec, params, seed)
        return report.to_dict(), tables, False

    def _probe_table(self, spec: SystemSpec, params: RunParameters, seed: int) -> pd.DataFrame:
        """Direct D(r) estimates normalized by (E J)^2, next to both analytic bounds."""
        scale = ej_squared(spec.N, spec.K)
        rows = []
        for i, r in enumerate(params.probes):
            estimate = d_of_r_mc(
                spec,
                r,
                params.samples_per_node,
                seed=task_int_seed(seed, params.nodes + i),
                max_overlap=self.max_overlap,
            )
            rows.append(
                {
                    "r": r,
                    "D_hat": estimate.estimate,
                    "D_se": estimate.std_error,
                    "ratio": estimate.estimate / scale,
                    "ratio_se": estimate.std_error / scale,
                    "chi_ratio_bound": chi_ratio_bound(spec.N, spec.K, r),
                    "dbar_bound": dbar_bound(spec.N, r) if spec.N >= 2 else np.nan,
                }
            )
        return pd.DataFrame(
            rows, columns=["r", "D_hat", "D_se", "ratio", "ratio_se", "chi_ratio_bound", "dbar_bound"]
        )

    def _newton_options(self, params: RunParameters) -> NewtonOptions:
        return NewtonOptions(
            n_starts=params.starts,
            residual_tol=params.residual_tol,
            dedupe_radius=params.dedupe_radius,
        )

    def _count_trials(self, spec: SystemSpec, params: RunParameters, seed: int):
        moments = empirical_moments(
            spec,
            n_trials=params.trials,
            seed=seed,
            options=self._newton_options(params),
            n_slices=params.slices,
            threads=self.threads,
        )
        result = moments.summary()
        mean = moments.as_estimate()
        result["z_score"] = mean.z_score(moments.expected)
        kept = moments.kept
        if kept.size:
            result["second_moment"] = mean_estimate(kept**2).to_dict()
        flagged = bool(moments.saturated.any() or moments.degenerate.any())
        return result, {"trials": moments.to_dataframe()}, flagged

    def _run_mc(self, config: ExperimentConfig, seed: int):
        return self._count_trials(self._system(config, "mc"), config.params, seed)

    def _run_count(self, config: ExperimentConfig, seed: int):
        spec = self._system(config, "count")
        if not spec.is_square:
            raise DomainError("K", f"count needs K = N, got K={spec.K}, N={spec.N}; use crofton")
        return self._count_trials(spec, config.params, seed)

    def _run_crofton(self, config: ExperimentConfig, seed: int):
        spec = self._system(config, "crofton")
        if spec.is_square:
            raise DomainError("K", f"crofton needs K < N, got K={spec.K}, N={spec.N}; use count")
        return self._count_trials(spec, config.params, seed)

    def _run_series_check(self, config: ExperimentConfig, seed: int):
        params = config.params
        table = series_check(
            params.trials, seed=seed, max_dim=params.max_dim, max_degree=params.max_degree
        )
        min_coefficient = float(table["min_coefficient"].min())
        residuals = table["derivative_residual"].dropna()
        result = {
            "n_trials": int(len(table)),
            "min_coefficient": min_coefficient,
            "nonnegative": bool(min_coefficient >= -NONNEGATIVE_SLACK),
            "max_derivative_residual": float(residuals.max()) if len(residuals) else None,
        }
        if not result["nonnegative"]:
            self.logger.warning(f"Series coefficient {min_coefficient:.3e} below -{NONNEGATIVE_SLACK}")
        return result, {"series_check": table}, False

    def _run_blowup(self, config: ExperimentConfig, seed: int):
        params = config.params
        N = config.system.N if config.system is not None else 8
        table = blowup_diagnostics(params.p, N, n_grid=params.grid)
        result = {
            "p": params.p,
            "N": N,
            "window": [0.5, float(1.0 - 2.0 * np.log(params.p) / params.p)],
            "holds": bool(table["holds"].all()),
            "min_margin": float((table["M1L"] - table["lower_bound"]).min()),
        }
        if not result["holds"]:
            self.logger.warning(f"Blow-up inequality fails on {int((~table['holds']).sum())} grid points")
        return result, {"blowup": table}, False


__all__ = ["ExperimentService", "RunOutcome", "SUBCOMMANDS"]
