"""Data models for moment reports, Monte Carlo estimates and zero counts."""

from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Optional
import json

import numpy as np
import pandas as pd


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A Monte Carlo mean with its standard error."""

    estimate: float
    std_error: float
    n_samples: int

    def __iter__(self):
        """Unpack as (estimate, std_error)."""
        return iter((self.estimate, self.std_error))

    def z_score(self, target: float) -> float:
        """(estimate - target) / std_error; 0 when both coincide exactly."""
        diff = self.estimate - target
        if self.std_error == 0.0:
            return 0.0 if diff == 0.0 else float(np.sign(diff) * np.inf)
        return diff / self.std_error

    def within(self, target: float, n_se: float = 3.0) -> bool:
        """True when target lies within n_se standard errors."""
        return abs(self.z_score(target)) <= n_se

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MonteCarloEstimate":
        """Create from dict (e.g., from JSON)."""
        return cls(
            estimate=float(data["estimate"]),
            std_error=float(data["std_error"]),
            n_samples=int(data["n_samples"]),
        )


def combined_se(*estimates: MonteCarloEstimate) -> float:
    """Standard error of a sum or difference of independent estimates."""
    return float(np.sqrt(sum(e.std_error**2 for e in estimates)))


@dataclass(frozen=True)
class MomentReport:
    """Closed-form expected size of the zero set."""

    N: int
    K: int
    first_moment: float
    factors: tuple[float, ...]  # sqrt(xi_k'(1) / xi_k(1)) per equation
    volume_factor: float  # Vol(S^{N-K})

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict."""
        data = asdict(self)
        data["factors"] = list(self.factors)
        return data

    def to_json(self) -> str:
        """Serialize to JSON string."""
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MomentReport":
        """Create from dict (e.g., from JSON)."""
        return cls(
            N=int(data["N"]),
            K=int(data["K"]),
            first_moment=float(data["first_moment"]),
            factors=tuple(float(f) for f in data["factors"]),
            volume_factor=float(data["volume_factor"]),
        )


@dataclass(frozen=True)
class KacRiceNode:
    """Diagnostics at one quadrature node of the second-moment integral."""

    r: float
    weight: float
    D_hat: float
    D_se: float
    integrand: float
    cumulative: float


@dataclass
class KacRiceReport:
    """Monte Carlo evaluation of the second moment and the variance ratio."""

    N: int
    K: int
    first_moment: float
    interior: MonteCarloEstimate  # integral over r in (-1, 1)
    atoms: float  # contributions of r = 1 and r = -1
    nodes: list[KacRiceNode] = field(default_factory=list)
    seed: Optional[int] = None
    wall_time: float = 0.0
    version: str = ""

    @property
    def second_moment(self) -> MonteCarloEstimate:
        """E Z^2 = interior integral + atoms."""
        return MonteCarloEstimate(
            estimate=self.interior.estimate + self.atoms,
            std_error=self.interior.std_error,
            n_samples=self.interior.n_samples,
        )

    @property
    def variance_ratio(self) -> MonteCarloEstimate:
        """(E Z^2 - (E Z)^2) / (E Z)^2 with propagated standard error."""
        scale = self.first_moment**2
        second = self.second_moment
        return MonteCarloEstimate(
            estimate=(second.estimate - scale) / scale,
            std_error=second.std_error / scale,
            n_samples=second.n_samples,
        )

    def to_dataframe(self) -> pd.DataFrame:
        """Per-node table with columns r, D_hat, D_se, integrand, cumulative."""
        columns = ["r", "D_hat", "D_se", "integrand", "cumulative"]
        if not self.nodes:
            return pd.DataFrame(columns=columns)
        return pd.DataFrame([asdict(node) for node in self.nodes])[columns]

    def to_dict(self) -> dict[str, Any]:
        """Convert to JSON-serializable dict."""
        return {
            "N": self.N,
            "K": self.K,
            "first_moment": self.first_moment,
            "interior": self.interior.to_dict(),
            "atoms": self.atoms,
            "second_moment": self.second_moment.to_dict(),
            "variance_ratio": self.variance_ratio.to_dict(),
            "nodes": [asdict(node) for node in self.nodes],
            "seed": self.seed,
            "wall_time": self.wall_time,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "KacRiceReport":
        """Create from dict; derived fields are recomputed, not read."""
        return cls(
            N=int(data["N"]),
            K=int(data["K"]),
            first_moment=float(data["first_moment"]),
            interior=MonteCarloEstimate.from_dict(data["interior"]),
            atoms=float(data["atoms"]),
            nodes=[KacRiceNode(**node) for node in data.get("nodes", [])],
            seed=data.get("seed"),
            wall_time=float(data.get("wall_time", 0.0)),
            version=data.get("version", ""),
        )


class CountStatus(Enum):
    """Outcome codes for a single zero count."""

    OK = "ok"
    SATURATED = "saturated"  # new roots still appeared in the final starts
    DEGENERATE = "degenerate"  # Jacobian condition number above threshold at a root


@dataclass
class ZeroCountResult:
    """Zero count (K = N) or Hausdorff measure estimate (K < N) of one system."""

    count: Optional[int] = None
    measure: Optional[float] = None
    residual_max: float = 0.0
    dedupe_radius: float = 0.0
    saturated: bool = False
    degenerate: bool = False
    n_starts: int = 0
    n_failed: int = 0
    roots: Optional[np.ndarray] = None

    @property
    def value(self) -> float:
        """The count, or the measure when no count applies."""
        if self.count is not None:
            return float(self.count)
        return float(self.measure) if self.measure is not None else float("nan")

    @property
    def status(self) -> CountStatus:
        """Degeneracy outranks saturation."""
        if self.degenerate:
            return CountStatus.DEGENERATE
        if self.saturated:
            return CountStatus.SATURATED
        return CountStatus.OK

    @property
    def flagged(self) -> bool:
        """True unless the count is clean."""
        return self.status is not CountStatus.OK


@dataclass
class EmpiricalMoments:
    """Sample moments of Z over independently drawn systems."""

    values: np.ndarray
    saturated: np.ndarray
    degenerate: np.ndarray
    expected: Optional[float] = None

    @property
    def kept(self) -> np.ndarray:
        """Values of trials that are not degenerate."""
        return self.values[~self.degenerate]

    @property
    def n_trials(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(self.kept.mean())

    @property
    def variance(self) -> float:
        kept = self.kept
        return float(kept.var(ddof=1)) if kept.size > 1 else 0.0

    @property
    def std_error(self) -> float:
        kept = self.kept
        return float(np.sqrt(self.variance / kept.size)) if kept.size else float("nan")

    @property
    def normalized_variance(self) -> float:
        """Var(Z) / (E Z)^2, using the closed form for E Z when known."""
        scale = self.expected if self.expected is not None else self.mean
        return self.variance / scale**2

    @property
    def saturation_rate(self) -> float:
        return float(self.saturated.mean()) if self.n_trials else 0.0

    @property
    def degeneracy_rate(self) -> float:
        return float(self.degenerate.mean()) if self.n_trials else 0.0

    def as_estimate(self) -> MonteCarloEstimate:
        """The sample mean as a MonteCarloEstimate."""
        return MonteCarloEstimate(self.mean, self.std_error, int(self.kept.size))

    def summary(self) -> dict[str, Any]:
        """JSON-serializable summary."""
        return {
            "n_trials": self.n_trials,
            "mean": self.mean,
            "variance": self.variance,
            "std_error": self.std_error,
            "normalized_variance": self.normalized_variance,
            "expected": self.expected,
            "saturation_rate": self.saturation_rate,
            "degeneracy_rate": self.degeneracy_rate,
        }

    def to_dataframe(self) -> pd.DataFrame:
        """Per-trial table with columns trial, count_or_measure, saturated."""
        return pd.DataFrame(
            {
                "trial": np.arange(self.n_trials),
                "count_or_measure": self.values,
                "saturated": self.saturated | self.degenerate,
            }
        )
