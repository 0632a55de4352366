"""Empirical moments of zero counts and measures over fresh systems."""

import logging
from typing import Optional

import numpy as np

from kss.models.reports import EmpiricalMoments, ZeroCountResult
from kss.models.spectrum import SystemSpec
from kss.models.system import PolynomialMap
from kss.moments import expected_zero_measure
from kss.montecarlo import map_tasks, task_int_seed, task_rng
from kss.sampler import sample_system
from kss.zerocount.circle import CircleCounter
from kss.zerocount.crofton import CroftonEstimator
from kss.zerocount.sphere import NewtonOptions, SphereCounter

logger = logging.getLogger(__name__)


def measure_zeros(
    system: PolynomialMap,
    seed: int = 0,
    options: Optional[NewtonOptions] = None,
    n_slices: int = 1,
    allow_empty: bool = True,
) -> ZeroCountResult:
    """
    Pick the counting tier for the system's shape and run it.

    The residual tolerance in options applies to every tier. With allow_empty
    a square system on which no Newton start converges counts as having no
    real zeros; otherwise NonConvergenceError is raised.
    """
    options = options or NewtonOptions()
    N = system.n_vars - 1
    K = system.n_equations
    circle = CircleCounter(residual_tol=options.residual_tol)
    if K < N:
        return CroftonEstimator(n_slices=n_slices, circle=circle, sphere=SphereCounter(options)).count(
            system, seed=seed
        )
    if N == 1:
        return circle.count(system)
    return SphereCounter(options).count(system, seed=seed, allow_empty=allow_empty)


def empirical_moments(
    spec: SystemSpec,
    n_trials: int,
    seed: int = 0,
    options: Optional[NewtonOptions] = None,
    n_slices: int = 1,
    threads: int = 1,
) -> EmpiricalMoments:
    """
    Sample mean and variance of Z over n_trials independent systems.

    Trial t draws its system from the sub-seed for task t, so the result
    does not depend on the number of threads. Degenerate trials are kept in
    the per-trial table but excluded from the moments.
    """

    def run_trial(t: int) -> ZeroCountResult:
        system = sample_system(spec, task_rng(seed, t))
        return measure_zeros(system, task_int_seed(seed, t), options, n_slices)

    results = map_tasks(run_trial, range(n_trials), threads=threads)
    moments = EmpiricalMoments(
        values=np.array([r.value for r in results], dtype=float),
        saturated=np.array([r.saturated for r in results], dtype=bool),
        degenerate=np.array([r.degenerate for r in results], dtype=bool),
        expected=expected_zero_measure(spec).first_moment,
    )
    if moments.degeneracy_rate > 0:
        logger.warning(f"{moments.degeneracy_rate:.2%} of trials had degenerate zero sets")
    logger.info(
        f"Empirical mean {moments.mean:.4f} +- {moments.std_error:.4f} "
        f"over {n_trials} trials (expected {moments.expected:.4f})"
    )
    return moments


def overlap_pair_count(roots: np.ndarray, interval: tuple[float, float]) -> int:
    """Number of ordered root pairs (x, y), diagonal included, with x . y in interval."""
    roots = np.atleast_2d(roots)
    if roots.size == 0:
        return 0
    overlaps = np.clip(roots @ roots.T, -1.0, 1.0)
    a, b = interval
    return int(((overlaps >= a) & (overlaps <= b)).sum())
