"""Data models for block-covariance Gaussian pairs and polynomial observables."""

from dataclasses import dataclass
from typing import Any

import numpy as np

from kss.exceptions import DomainError

_PSD_TOL = 1e-10


def _check_psd(name: str, matrix: np.ndarray) -> None:
    scale = max(1.0, float(np.abs(matrix).max()))
    smallest = float(np.linalg.eigvalsh((matrix + matrix.T) / 2).min())
    if smallest < -_PSD_TOL * scale:
        raise DomainError(name, f"not positive semi-definite (min eigenvalue {smallest:.3e})")


@dataclass(frozen=True)
class BlockPairCovariance:
    """
    Gaussian pair (X_t, Y_t) on R^n x R^n with covariance
    [[S0, S1 + t S], [S1 + t S, S0]].
    """

    sigma0: np.ndarray
    sigma1: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        shapes = set()
        for name in ("sigma0", "sigma1", "sigma"):
            value = np.atleast_2d(np.asarray(getattr(self, name), dtype=float))
            if value.shape[0] != value.shape[1] or not np.allclose(value, value.T):
                raise DomainError(name, "must be a symmetric square matrix")
            _check_psd(name, value)
            shapes.add(value.shape)
            object.__setattr__(self, name, value)
        if len(shapes) != 1:
            raise DomainError("block_pair", f"blocks differ in shape: {sorted(shapes)}")
        for t in (-1.0, 1.0):
            _check_psd(f"sigma({t:+g})", self.joint(t))

    @property
    def n(self) -> int:
        return self.sigma0.shape[0]

    def joint(self, t: float) -> np.ndarray:
        """The 2n x 2n covariance of (X_t, Y_t)."""
        off = self.sigma1 + t * self.sigma
        return np.block([[self.sigma0, off], [off, self.sigma0]])

    def reduced(self, t: float) -> np.ndarray:
        """Covariance of (X_hat_t, Y_hat_t) once the common part Z ~ N(0, S1) is split off."""
        base = self.sigma0 - self.sigma1
        off = t * self.sigma
        return np.block([[base, off], [off, base]])


@dataclass(frozen=True)
class PolyObservable:
    """A polynomial on R^n stored as (multi-index, coefficient) terms."""

    n: int
    terms: tuple[tuple[tuple[int, ...], float], ...]

    def __post_init__(self):
        merged: dict[tuple[int, ...], float] = {}
        for alpha, c in self.terms:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or min(alpha, default=0) < 0:
                raise DomainError("observable", f"bad multi-index {alpha} for n={self.n}")
            merged[alpha] = merged.get(alpha, 0.0) + float(c)
        object.__setattr__(
            self, "terms", tuple(sorted((a, c) for a, c in merged.items() if c != 0.0))
        )

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> "PolyObservable":
        return cls(n=n, terms=(((0,) * n, value),))

    @classmethod
    def from_dict(cls, n: int, coefficients: dict[tuple[int, ...], float]) -> "PolyObservable":
        return cls(n=n, terms=tuple(coefficients.items()))

    @property
    def degree(self) -> int:
        """Total degree; 0 for the zero polynomial."""
        return max((sum(alpha) for alpha, _ in self.terms), default=0)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Values at the rows of X, shape (S,)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.terms:
            return np.zeros(X.shape[0])
        exponents = np.array([alpha for alpha, _ in self.terms])
        coefficients = np.array([c for _, c in self.terms])
        return np.prod(X[:, None, :] ** exponents[None, :, :], axis=2) @ coefficients

    def partial(self, i: int) -> "PolyObservable":
        """Partial derivative in coordinate i."""
        terms = []
        for alpha, c in self.terms:
            if alpha[i] > 0:
                lowered = list(alpha)
                lowered[i] -= 1
                terms.append((tuple(lowered), c * alpha[i]))
        return PolyObservable(n=self.n, terms=tuple(terms))

    def to_dict(self) -> dict[str, Any]:
        """JSON encoding with comma-joined multi-index keys."""
        return {
            "n": self.n,
            "terms": {",".join(map(str, alpha)): c for alpha, c in self.terms},
        }
