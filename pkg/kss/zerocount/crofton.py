"""Hausdorff measure of positive-dimensional zero sets by random slicing."""

from typing import Optional

import numpy as np
from scipy.linalg import null_space

from kss.exceptions import DomainError
from kss.models.reports import ZeroCountResult
from kss.models.system import PolynomialMap
from kss.moments import sphere_volume
from kss.montecarlo import MomentAccumulator, task_int_seed, task_rng
from kss.zerocount.base import BaseZeroCounter
from kss.zerocount.circle import CircleCounter
from kss.zerocount.sphere import SphereCounter


class CroftonEstimator(BaseZeroCounter):
    """
    Estimates the (N-K)-dimensional measure of {f = 0} on S^N for K < N.

    Each slice appends N - K independent standard Gaussian linear forms,
    i.e. intersects with a uniformly random great K-subsphere. The slice
    count is found on that subsphere through an orthonormal basis of the
    kernel of the linear forms, and

        measure = Vol(S^{N-K}) / 2 * mean slice count.
    """

    def __init__(
        self,
        n_slices: int = 1,
        circle: Optional[CircleCounter] = None,
        sphere: Optional[SphereCounter] = None,
    ):
        super().__init__()
        self.n_slices = n_slices
        self.circle = circle or CircleCounter()
        self.sphere = sphere or SphereCounter()

    def slice_basis(self, n_vars: int, n_equations: int, rng: np.random.Generator) -> np.ndarray:
        """Orthonormal basis (n_vars x (K+1)) of the kernel of N - K Gaussian forms."""
        forms = rng.standard_normal((n_vars - 1 - n_equations, n_vars))
        return null_space(forms)

    def count(self, system: PolynomialMap, seed: int = 0) -> ZeroCountResult:
        """
        Estimate the zero-set measure of system from n_slices random slices.

        Args:
            system: K < N equations in N + 1 variables
            seed: Root seed; slice s uses the sub-seed for task s
        """
        self._clear_warnings()
        N = system.n_vars - 1
        K = system.n_equations
        if K >= N:
            raise DomainError("system", f"slicing needs K < N, got K={K}, N={N}")

        counts = MomentAccumulator()
        saturated = degenerate = False
        residual_max = 0.0
        n_starts = n_failed = 0

        for s in range(self.n_slices):
            basis = self.slice_basis(system.n_vars, K, task_rng(seed, s))
            restricted = system.restrict(basis)
            if K == 1:
                result = self.circle.count(restricted)
            else:
                # A random slice can miss the zero set entirely.
                result = self.sphere.count(restricted, seed=task_int_seed(seed, s), allow_empty=True)
            counts.add([result.count])
            saturated |= result.saturated
            degenerate |= result.degenerate
            residual_max = max(residual_max, result.residual_max)
            n_starts += result.n_starts
            n_failed += result.n_failed

        measure = 0.5 * sphere_volume(N - K + 1) * counts.mean
        self.logger.debug(f"Mean slice count {counts.mean:.4g} over {self.n_slices} slices")
        return ZeroCountResult(
            measure=float(measure),
            residual_max=residual_max,
            dedupe_radius=self.sphere.options.dedupe_radius,
            saturated=saturated,
            degenerate=degenerate,
            n_starts=n_starts,
            n_failed=n_failed,
        )
