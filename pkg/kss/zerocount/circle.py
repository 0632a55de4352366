"""Exact zero counting on the circle S^1."""

import numpy as np
from scipy.optimize import brentq
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from kss.exceptions import GridSaturationError
from kss.models.reports import ZeroCountResult
from kss.models.system import PolynomialMap
from kss.zerocount.base import BaseZeroCounter


class CircleCounter(BaseZeroCounter):
    """
    Counts the zeros of one equation in two variables on the unit circle.

    On (cos t, sin t) a degree-d polynomial is a trigonometric polynomial
    with at most 2d zeros. A uniform grid of max(1024, 64 d) angles brackets
    every simple zero by a sign change; each bracket is polished by Brent's
    method. When two sign changes fall within two grid cells the grid is
    doubled, up to max_attempts grids in total.
    """

    def __init__(
        self,
        min_grid: int = 1024,
        points_per_degree: int = 64,
        xtol: float = 1e-12,
        max_attempts: int = 3,
        residual_tol: float = 1e-10,
    ):
        super().__init__(residual_tol=residual_tol)
        self.min_grid = min_grid
        self.points_per_degree = points_per_degree
        self.xtol = xtol
        self.max_attempts = max_attempts

    def grid_size(self, degree: int) -> int:
        return max(self.min_grid, self.points_per_degree * degree)

    def count(self, system: PolynomialMap) -> ZeroCountResult:
        """
        Count the zeros of system on S^1.

        Raises:
            DomainError: If system is not one equation in two variables
            GridSaturationError: If sign changes stay unresolved on the finest grid
        """
        self._clear_warnings()
        self._check_shape(system, n_vars=2)
        base = self.grid_size(system.max_degree)

        for attempt in Retrying(
            stop=stop_after_attempt(self.max_attempts),
            retry=retry_if_exception_type(GridSaturationError),
            reraise=True,
        ):
            with attempt:
                grid = base * 2 ** (attempt.retry_state.attempt_number - 1)
                if grid > base:
                    self._add_warning(f"Refining angle grid to {grid} points")
                return self._count_on_grid(system, grid)

    def _count_on_grid(self, system: PolynomialMap, grid: int) -> ZeroCountResult:
        step = 2.0 * np.pi / grid
        # Half-step offset keeps symmetric deterministic zeros off the grid.
        theta = (np.arange(grid) + 0.5) * step

        def on_circle(t: float) -> float:
            return float(system.evaluate(np.array([np.cos(t), np.sin(t)]))[0])

        values = system.evaluate(np.column_stack([np.cos(theta), np.sin(theta)]))[:, 0]
        following = np.roll(values, -1)

        changes = np.flatnonzero(values * following < 0)
        exact = np.flatnonzero(values == 0.0)
        marks = np.sort(np.concatenate([changes, exact]))

        if marks.size > 1:
            gaps = np.diff(np.append(marks, marks[0] + grid))
            if gaps.min() < 2:
                raise GridSaturationError(grid)

        angles = [theta[i] for i in exact]
        for i in changes:
            lo = theta[i]
            hi = lo + step
            angles.append(brentq(on_circle, lo, hi, xtol=self.xtol))

        roots = np.column_stack([np.cos(angles), np.sin(angles)]) if angles else np.zeros((0, 2))
        residuals = self._residuals(system, roots)
        if residuals.size and residuals.max() > self.residual_tol:
            self._add_warning(f"Polished zero residual {residuals.max():.2e} above {self.residual_tol:.0e}")
        self.logger.debug(f"Found {len(angles)} zeros on a {grid}-point grid")
        return ZeroCountResult(
            count=len(angles),
            residual_max=float(residuals.max()) if residuals.size else 0.0,
            dedupe_radius=step,
            n_starts=grid,
            roots=roots,
        )
