"""Multi-start Newton zero counting on S^N for square systems."""

from dataclasses import dataclass
import math
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from kss.exceptions import NonConvergenceError
from kss.models.reports import ZeroCountResult
from kss.models.system import PolynomialMap
from kss.sampler import SeedLike, as_generator, random_unit_vectors
from kss.zerocount.base import BaseZeroCounter


@dataclass(frozen=True)
class NewtonOptions:
    """Settings for the multi-start Newton counter."""

    n_starts: Optional[int] = None  # default: starts_per_root * ceil(expected count)
    starts_per_root: int = 50
    dedupe_radius: float = 1e-6
    residual_tol: float = 1e-10
    max_iterations: int = 50
    max_halvings: int = 8
    condition_limit: float = 1e10
    max_failure_ratio: float = 0.99
    final_tranche: float = 0.1


class SphereCounter(BaseZeroCounter):
    """
    Counts zeros of K = N >= 2 equations on S^N by damped Newton on the
    augmented map (f_1, ..., f_N, |x|^2 - 1) from uniform random starts.

    Completeness is probabilistic. A result is flagged saturated when the
    final tranche of starts still produced a new root, and degenerate when
    the Jacobian at some root has condition number above the limit.
    """

    def __init__(self, options: Optional[NewtonOptions] = None):
        self.options = options or NewtonOptions()
        super().__init__(residual_tol=self.options.residual_tol)

    def default_starts(self, system: PolynomialMap) -> int:
        """starts_per_root * ceil(2 prod sqrt(d_k)), using each equation's top degree."""
        if self.options.n_starts is not None:
            return self.options.n_starts
        degrees = getattr(system, "degrees", None)
        if degrees is not None:
            tops = [int(d.max()) for d in degrees]
        else:
            tops = [system.max_degree] * system.n_equations
        expected = 2.0 * math.prod(math.sqrt(d) for d in tops)
        return self.options.starts_per_root * math.ceil(expected)

    def _augmented(self, system: PolynomialMap, X: np.ndarray, with_jacobian: bool = True):
        values = np.atleast_2d(system.evaluate(X))
        F = np.column_stack([values, (X**2).sum(axis=1) - 1.0])
        if not with_jacobian:
            return F, None
        grads = system.ambient_gradient(X)
        J = np.concatenate([grads, 2.0 * X[:, None, :]], axis=1)
        return F, J

    @staticmethod
    def _solve(J: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        try:
            return np.linalg.solve(J, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError:
            return np.einsum("sij,sj->si", np.linalg.pinv(J), rhs)

    def _newton(self, system: PolynomialMap, X: np.ndarray) -> np.ndarray:
        """Run damped Newton from each row of X; returns a converged mask and updates X."""
        opts = self.options
        converged = np.zeros(X.shape[0], dtype=bool)
        active = np.ones(X.shape[0], dtype=bool)

        for _ in range(opts.max_iterations):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            x = X[idx]
            F, J = self._augmented(system, x)
            done = np.abs(F[:, :-1]).max(axis=1) <= opts.residual_tol
            converged[idx[done]] = True
            active[idx[done]] = False

            keep = ~done
            idx, x, F, J = idx[keep], x[keep], F[keep], J[keep]
            if idx.size == 0:
                break

            with np.errstate(all="ignore"):
                step = self._solve(J, -F)
                base_norm = np.linalg.norm(F, axis=1)
                alpha = np.ones(idx.size)
                trial = x + step
                for _ in range(opts.max_halvings):
                    trial_F, _ = self._augmented(system, trial, with_jacobian=False)
                    worse = ~(np.linalg.norm(trial_F, axis=1) < base_norm)
                    if not worse.any():
                        break
                    alpha[worse] /= 2.0
                    trial[worse] = x[worse] + alpha[worse, None] * step[worse]
                trial /= np.linalg.norm(trial, axis=1, keepdims=True)

            finite = np.all(np.isfinite(trial), axis=1)
            X[idx[finite]] = trial[finite]
            active[idx[~finite]] = False

        idx = np.flatnonzero(active)
        if idx.size:
            F, _ = self._augmented(system, X[idx], with_jacobian=False)
            converged[idx[np.abs(F[:, :-1]).max(axis=1) <= opts.residual_tol]] = True
        return converged

    def _dedupe(self, roots: np.ndarray, origin: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cluster roots within dedupe_radius; return representatives and discovery starts."""
        tree = cKDTree(roots)
        pairs = tree.query_pairs(self.options.dedupe_radius, output_type="ndarray")
        n = roots.shape[0]
        pairs = pairs.reshape(-1, 2)
        adjacency = coo_matrix(
            (np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
        )
        n_clusters, labels = connected_components(adjacency, directed=False)

        representatives = np.zeros((n_clusters, roots.shape[1]))
        discovered = np.full(n_clusters, np.iinfo(np.int64).max)
        for i in range(n):
            label = labels[i]
            if origin[i] < discovered[label]:
                discovered[label] = origin[i]
                representatives[label] = roots[i]
        return representatives, discovered

    def count(
        self, system: PolynomialMap, seed: SeedLike = None, allow_empty: bool = False
    ) -> ZeroCountResult:
        """
        Count zeros of a square system on S^N.

        Args:
            system: K = N equations in N + 1 variables
            seed: Seed for the random starts; defaults to the system's seed or 0
            allow_empty: Report 0 zeros instead of raising when no start converged

        Raises:
            DomainError: If K != N
            NonConvergenceError: If more than 99% of starts failed, all of them included
        """
        self._clear_warnings()
        self._check_shape(system, n_vars=None)
        opts = self.options

        if seed is None:
            seed = getattr(system, "seed", None) or 0
        n_starts = self.default_starts(system)
        X = random_unit_vectors(system.n_vars, n_starts, as_generator(seed))
        converged = self._newton(system, X)
        n_failed = int((~converged).sum())

        if not converged.any() and allow_empty:
            self.logger.debug(f"No start converged out of {n_starts}; reporting no zeros")
            return ZeroCountResult(
                count=0,
                dedupe_radius=opts.dedupe_radius,
                n_starts=n_starts,
                n_failed=n_failed,
                roots=np.zeros((0, system.n_vars)),
            )

        failure_ratio = n_failed / n_starts
        if failure_ratio > opts.max_failure_ratio:
            raise NonConvergenceError(failure_ratio)

        roots = X[converged]
        origin = np.flatnonzero(converged)
        if system.is_antipodal_closed:
            roots = np.vstack([roots, -roots])
            origin = np.concatenate([origin, origin])

        unique, discovered = self._dedupe(roots, origin)
        saturated = bool((discovered >= math.floor((1.0 - opts.final_tranche) * n_starts)).any())

        _, J = self._augmented(system, unique)
        conditions = np.linalg.cond(J)
        degenerate = bool((~np.isfinite(conditions) | (conditions > opts.condition_limit)).any())

        if saturated:
            self._add_warning(f"New roots still appearing in the last {opts.final_tranche:.0%} of starts")
        if degenerate:
            self._add_warning(f"Jacobian condition number {np.nanmax(conditions):.2e} at a root")

        residuals = self._residuals(system, unique)
        return ZeroCountResult(
            count=int(unique.shape[0]),
            residual_max=float(residuals.max()),
            dedupe_radius=opts.dedupe_radius,
            saturated=saturated,
            degenerate=degenerate,
            n_starts=n_starts,
            n_failed=n_failed,
            roots=unique,
        )
