"""Base class for zero counters."""

from abc import ABC, abstractmethod
import logging

import numpy as np

from kss.exceptions import DomainError
from kss.models.reports import ZeroCountResult
from kss.models.system import PolynomialMap


class BaseZeroCounter(ABC):
    """
    Base class for zero counters.

    Counters turn a sampled system into a ZeroCountResult. Numerical
    trouble that does not invalidate the count (saturation, degeneracy,
    refinement) is reported through warnings and result flags.
    """

    def __init__(self, residual_tol: float = 1e-10):
        self.residual_tol = residual_tol
        self.logger = logging.getLogger(self.__class__.__name__)
        self._warnings: list[str] = []

    @abstractmethod
    def count(self, system: PolynomialMap) -> ZeroCountResult:
        """
        Count or measure the zero set of system on the unit sphere.

        Override in subclasses.
        """
        pass

    @property
    def warnings(self) -> list[str]:
        """Numerical warnings from the last count."""
        return self._warnings.copy()

    def _add_warning(self, message: str):
        """Add a numerical warning."""
        self._warnings.append(message)
        self.logger.warning(message)

    def _clear_warnings(self):
        """Clear warnings before a new count."""
        self._warnings = []

    def _residuals(self, system: PolynomialMap, roots: np.ndarray) -> np.ndarray:
        """max_k |f_k(x)| for each root."""
        if roots.size == 0:
            return np.zeros(0)
        return np.abs(np.atleast_2d(system.evaluate(roots))).max(axis=1)

    def _check_shape(self, system: PolynomialMap, n_vars: int | None, square: bool = True):
        """Validate the number of variables and equations a counter supports."""
        if n_vars is not None and system.n_vars != n_vars:
            raise DomainError(
                "system", f"{self.__class__.__name__} needs {n_vars} variables, got {system.n_vars}"
            )
        if square and system.n_equations != system.n_vars - 1:
            raise DomainError(
                "system",
                f"{self.__class__.__name__} needs K = N, got K={system.n_equations}, "
                f"N={system.n_vars - 1}",
            )
