"""Data models for sampled polynomial systems and tangent frames."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Optional
import json

import numpy as np

from kss.exceptions import DomainError

# Largest max |G - I| accepted for the Gram matrix of a tangent frame.
FRAME_TOL = 1e-12


class PolynomialMap(ABC):
    """
    A system of K polynomials in n real variables, evaluated in batches.

    Points are passed as arrays of shape (S, n) or (n,).
    """

    @property
    @abstractmethod
    def n_vars(self) -> int:
        """Number of ambient variables n."""

    @property
    @abstractmethod
    def n_equations(self) -> int:
        """Number of equations K."""

    @property
    @abstractmethod
    def max_degree(self) -> int:
        """Largest total degree over all equations."""

    @property
    @abstractmethod
    def is_antipodal_closed(self) -> bool:
        """True when every equation satisfies f(-x) = +-f(x)."""

    @abstractmethod
    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Values, shape (S, K) (or (K,) for a single point)."""

    @abstractmethod
    def ambient_gradient(self, X: np.ndarray) -> np.ndarray:
        """Euclidean gradients, shape (S, K, n) (or (K, n))."""


def _monomials(X: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """x^alpha for every row of X and every multi-index, shape (S, M)."""
    return np.prod(X[:, None, :] ** exponents[None, :, :], axis=2)


@dataclass
class PolynomialSystem(PolynomialMap):
    """
    Sampled coefficients of K polynomials on R^{N+1} in the monomial basis.

    Each equation k is a pair (exponents[k], coefficients[k]) with exponents
    of shape (M_k, N+1) and coefficients of shape (M_k,).
    """

    N: int
    exponents: list[np.ndarray] = field(default_factory=list)
    coefficients: list[np.ndarray] = field(default_factory=list)
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.exponents) != len(self.coefficients):
            raise DomainError("system", "exponent and coefficient lists differ in length")
        self.exponents = [np.asarray(e, dtype=np.int64) for e in self.exponents]
        self.coefficients = [np.asarray(c, dtype=float) for c in self.coefficients]
        for e, c in zip(self.exponents, self.coefficients):
            if e.ndim != 2 or e.shape[1] != self.N + 1 or e.shape[0] != c.shape[0]:
                raise DomainError("system", f"bad equation shapes {e.shape}, {c.shape}")

    @classmethod
    def from_linear_forms(cls, G: np.ndarray, seed: Optional[int] = None) -> "PolynomialSystem":
        """Degree-one equations x . G[k] for each row of G."""
        G = np.atleast_2d(np.asarray(G, dtype=float))
        n = G.shape[1]
        eye = np.eye(n, dtype=np.int64)
        return cls(
            N=n - 1,
            exponents=[eye.copy() for _ in range(G.shape[0])],
            coefficients=[row.copy() for row in G],
            seed=seed,
        )

    @property
    def K(self) -> int:
        """Number of equations."""
        return len(self.coefficients)

    @property
    def n_vars(self) -> int:
        return self.N + 1

    @property
    def n_equations(self) -> int:
        return self.K

    @property
    def degrees(self) -> list[np.ndarray]:
        """Total degree of every monomial, per equation."""
        return [e.sum(axis=1) for e in self.exponents]

    @property
    def max_degree(self) -> int:
        return int(max(d.max() for d in self.degrees))

    @property
    def is_antipodal_closed(self) -> bool:
        return all(len(set((d % 2).tolist())) <= 1 for d in self.degrees)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        values = np.stack(
            [_monomials(X, e) @ c for e, c in zip(self.exponents, self.coefficients)],
            axis=1,
        )
        return values[0] if single else values

    def ambient_gradient(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        grads = np.zeros((X.shape[0], self.K, self.n_vars))
        for k, (e, c) in enumerate(zip(self.exponents, self.coefficients)):
            for i in range(self.n_vars):
                lowered = e.copy()
                lowered[:, i] = np.maximum(lowered[:, i] - 1, 0)
                grads[:, k, i] = _monomials(X, lowered) @ (c * e[:, i])
        return grads[0] if single else grads

    def restrict(self, basis: np.ndarray) -> "RestrictedSystem":
        """View of u -> f(B u) for an orthonormal basis B of shape (N+1, m)."""
        return RestrictedSystem(parent=self, basis=np.asarray(basis, dtype=float))

    def coefficient_map(self, k: int) -> dict[tuple[int, ...], float]:
        """Multi-index -> coefficient for equation k."""
        return {
            tuple(int(a) for a in alpha): float(c)
            for alpha, c in zip(self.exponents[k], self.coefficients[k])
        }

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict (multi-index strings as keys)."""
        return {
            "N": self.N,
            "K": self.K,
            "seed": self.seed,
            "equations": [
                {",".join(map(str, alpha)): c for alpha, c in self.coefficient_map(k).items()}
                for k in range(self.K)
            ],
        }

    def to_json(self) -> str:
        """Serialize to JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PolynomialSystem":
        """Create from dict (e.g., from JSON)."""
        exponents = []
        coefficients = []
        for equation in data["equations"]:
            alphas = [tuple(int(a) for a in key.split(",")) for key in equation]
            exponents.append(np.array(alphas, dtype=np.int64).reshape(-1, data["N"] + 1))
            coefficients.append(np.array(list(equation.values()), dtype=float))
        return cls(
            N=int(data["N"]),
            exponents=exponents,
            coefficients=coefficients,
            seed=data.get("seed"),
        )

    @classmethod
    def from_json(cls, json_str: str) -> "PolynomialSystem":
        """Deserialize from JSON string."""
        return cls.from_dict(json.loads(json_str))


@dataclass
class RestrictedSystem(PolynomialMap):
    """The composition u -> f(B u), used to restrict a system to a great subsphere."""

    parent: PolynomialMap
    basis: np.ndarray

    @property
    def n_vars(self) -> int:
        return self.basis.shape[1]

    @property
    def n_equations(self) -> int:
        return self.parent.n_equations

    @property
    def max_degree(self) -> int:
        return self.parent.max_degree

    @property
    def is_antipodal_closed(self) -> bool:
        return self.parent.is_antipodal_closed

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        return self.parent.evaluate(np.asarray(X, dtype=float) @ self.basis.T)

    def ambient_gradient(self, X: np.ndarray) -> np.ndarray:
        return self.parent.ambient_gradient(np.asarray(X, dtype=float) @ self.basis.T) @ self.basis


@dataclass(frozen=True)
class TangentFrame:
    """An orthonormal basis of the tangent space of S^N at a base point."""

    base: np.ndarray
    vectors: np.ndarray  # shape (N, N+1)

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        vectors = np.asarray(self.vectors, dtype=float)
        if vectors.shape != (base.size - 1, base.size):
            raise DomainError("frame", f"expected {base.size - 1} vectors of length {base.size}")
        stacked = np.vstack([base, vectors])
        residual = np.abs(stacked @ stacked.T - np.eye(base.size)).max()
        if residual > FRAME_TOL:
            raise DomainError("frame", f"not orthonormal (Gram residual {residual:.2e})")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "vectors", vectors)

    @property
    def N(self) -> int:
        """Sphere dimension."""
        return self.vectors.shape[0]

    @property
    def gram_residual(self) -> float:
        """max |G - I| over the Gram matrix of (base, vectors)."""
        stacked = np.vstack([self.base, self.vectors])
        return float(np.abs(stacked @ stacked.T - np.eye(self.base.size)).max())
