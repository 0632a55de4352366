"""Data models for covariance spectra and system specifications."""

from dataclasses import dataclass, field
from typing import Any
import json

import numpy as np

from kss.exceptions import ConfigurationError, DomainError


@dataclass(frozen=True)
class MixedSpectrum:
    """
    Covariance polynomial xi(t) = sum_p w_p t^p of one random equation.

    Terms are stored sparsely as (degree, weight) pairs sorted by degree,
    where the weight is the variance a_p^2.
    """

    terms: tuple[tuple[int, float], ...]

    def __post_init__(self):
        terms = tuple(sorted((int(p), float(w)) for p, w in self.terms))
        object.__setattr__(self, "terms", terms)

        if not terms:
            raise DomainError("spectrum", "at least one term is required")

        degrees = [p for p, _ in terms]
        if len(set(degrees)) != len(degrees):
            raise DomainError("spectrum", f"duplicate degrees in {degrees}")
        if min(degrees) < 2:
            raise DomainError("spectrum", "all degrees must be >= 2")
        if any(w < 0 or not np.isfinite(w) for _, w in terms):
            raise DomainError("spectrum", "weights must be finite and >= 0")
        if not any(w > 0 for _, w in terms):
            raise DomainError("spectrum", "at least one weight must be > 0")

    @classmethod
    def monomial(cls, degree: int, weight: float = 1.0) -> "MixedSpectrum":
        """Single-term spectrum w t^degree (a homogeneous equation)."""
        return cls(terms=((degree, weight),))

    @property
    def degrees(self) -> np.ndarray:
        """Degrees as an integer array."""
        return np.array([p for p, _ in self.terms], dtype=np.int64)

    @property
    def weights(self) -> np.ndarray:
        """Weights a_p^2 as a float array."""
        return np.array([w for _, w in self.terms], dtype=float)

    @property
    def active_terms(self) -> tuple[tuple[int, float], ...]:
        """Terms with strictly positive weight."""
        return tuple((p, w) for p, w in self.terms if w > 0)

    @property
    def max_degree(self) -> int:
        """Degree cap d = max p."""
        return max(p for p, _ in self.terms)

    @property
    def is_parity_pure(self) -> bool:
        """True when all active degrees share one parity, so f(-x) = +-f(x)."""
        return len({p % 2 for p, _ in self.active_terms}) == 1

    def to_dict(self) -> dict[str, Any]:
        """Convert to the JSON spectrum encoding."""
        return {"terms": [{"p": p, "w": w} for p, w in self.terms]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MixedSpectrum":
        """Create from the JSON spectrum encoding."""
        try:
            terms = tuple((int(t["p"]), float(t["w"])) for t in data["terms"])
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError("spectrum.terms", f"malformed term list: {e}") from e
        return cls(terms=terms)

    def __str__(self) -> str:
        return " + ".join(f"{w:g}*t^{p}" for p, w in self.terms)


@dataclass(frozen=True)
class SystemSpec:
    """The finite-N slice of the spectra family: sphere S^N and K equations."""

    N: int
    K: int
    spectra: tuple[MixedSpectrum, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "spectra", tuple(self.spectra))

        if self.N < 1:
            raise DomainError("N", f"sphere dimension must be >= 1, got {self.N}")
        if not 1 <= self.K <= self.N:
            raise DomainError("K", f"need 1 <= K <= N, got K={self.K}, N={self.N}")
        if len(self.spectra) != self.K:
            raise DomainError(
                "spectra", f"expected {self.K} spectra, got {len(self.spectra)}"
            )

    @classmethod
    def homogeneous(cls, N: int, degrees: list[int]) -> "SystemSpec":
        """Mixed homogeneous system xi_k = t^{d_k}, with K = len(degrees)."""
        return cls(
            N=N,
            K=len(degrees),
            spectra=tuple(MixedSpectrum.monomial(d) for d in degrees),
        )

    @classmethod
    def uniform(cls, N: int, K: int, spectrum: MixedSpectrum) -> "SystemSpec":
        """K identically distributed equations."""
        return cls(N=N, K=K, spectra=tuple([spectrum] * K))

    @property
    def is_square(self) -> bool:
        """True when K = N, i.e. the zero set is finite."""
        return self.K == self.N

    def to_dict(self) -> dict[str, Any]:
        """Convert to the JSON SystemSpec encoding."""
        return {
            "N": self.N,
            "K": self.K,
            "spectra": [s.to_dict() for s in self.spectra],
        }

    def to_json(self) -> str:
        """Serialize to JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SystemSpec":
        """Create from dict (e.g., from JSON)."""
        for key in ("N", "K", "spectra"):
            if key not in data:
                raise ConfigurationError(f"system.{key}", "missing field")
        try:
            N = int(data["N"])
            K = int(data["K"])
        except (TypeError, ValueError) as e:
            raise ConfigurationError("system", f"N and K must be integers: {e}") from e
        spectra = tuple(MixedSpectrum.from_dict(s) for s in data["spectra"])
        return cls(N=N, K=K, spectra=spectra)

    @classmethod
    def from_json(cls, json_str: str) -> "SystemSpec":
        """Deserialize from JSON string."""
        return cls.from_dict(json.loads(json_str))
