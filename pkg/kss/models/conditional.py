"""Data models for two-point conditional Gaussian structure."""

from dataclasses import dataclass

import numpy as np

from kss.exceptions import DomainError


@dataclass(frozen=True)
class ConditionalPairModel:
    """
    Law of the normalized gradient matrices (M1, M2) at overlap r given
    f(x) = f(y) = 0.

    Entry (k, j) of M1 and M2 forms an independent 2x2 Gaussian block
    [[diagonal, cross], [cross, diagonal]]; blocks never mix indices.
    """

    N: int
    K: int
    r: float
    diagonal: np.ndarray  # (K, N): 1 for j < N, lambda_k(r) for j = N
    cross: np.ndarray  # (K, N)

    def __post_init__(self):
        for name in ("diagonal", "cross"):
            value = np.asarray(getattr(self, name), dtype=float)
            if value.shape != (self.K, self.N):
                raise DomainError(name, f"expected shape {(self.K, self.N)}, got {value.shape}")
            object.__setattr__(self, name, value)

    def block(self, k: int, j: int) -> np.ndarray:
        """The 2x2 covariance of (M1[k, j], M2[k, j])."""
        v = self.diagonal[k, j]
        c = self.cross[k, j]
        return np.array([[v, c], [c, v]])

    @property
    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue over all blocks, min(v - |c|)."""
        return float((self.diagonal - np.abs(self.cross)).min())

    def hatted(self) -> "ConditionalPairModel":
        """Same cross terms with last-column variances topped up to 1."""
        return ConditionalPairModel(
            N=self.N,
            K=self.K,
            r=self.r,
            diagonal=np.ones_like(self.diagonal),
            cross=self.cross,
        )


@dataclass(frozen=True)
class JointValueGradientCovariance:
    """
    Covariance of (f(x), f(y), grad f(x), grad f(y)) for one equation in the
    frame where x = e_N and y = (0, ..., sqrt(1 - r^2), r).

    Ordering: index 0 is f(x), 1 is f(y), 2..N+1 the gradient at x and
    N+2..2N+1 the gradient at y.
    """

    N: int
    r: float
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        size = 2 * self.N + 2
        if matrix.shape != (size, size):
            raise DomainError("matrix", f"expected {size}x{size}, got {matrix.shape}")
        object.__setattr__(self, "matrix", matrix)

    @property
    def value_index(self) -> np.ndarray:
        return np.array([0, 1])

    @property
    def gradient_index(self) -> np.ndarray:
        return np.arange(2, 2 * self.N + 2)

    @property
    def value_block(self) -> np.ndarray:
        """Covariance of (f(x), f(y))."""
        return self.matrix[np.ix_(self.value_index, self.value_index)]

    @property
    def gradient_block(self) -> np.ndarray:
        """Covariance of (grad f(x), grad f(y))."""
        return self.matrix[np.ix_(self.gradient_index, self.gradient_index)]

    @property
    def cross_block(self) -> np.ndarray:
        """Covariance between gradients (rows) and values (columns)."""
        return self.matrix[np.ix_(self.gradient_index, self.value_index)]

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())


@dataclass(frozen=True)
class ConditionalGradientTable:
    """
    Conditional covariances of grad f(x) and grad f(y) given f(x) = f(y) = 0,
    per frame index. Entries with different indices are zero.
    """

    N: int
    r: float
    variance: np.ndarray  # (N,), same at x and at y
    cross: np.ndarray  # (N,), between index i at x and index i at y

    def to_matrix(self) -> np.ndarray:
        """The 2N x 2N matrix ordered as (grad f(x), grad f(y))."""
        v = np.diag(self.variance)
        c = np.diag(self.cross)
        return np.block([[v, c], [c, v]])
