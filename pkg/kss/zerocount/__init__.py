"""Zero counting on spheres: exact circle tier, Newton tier and slicing estimator."""

from typing import Optional

from kss.models.reports import ZeroCountResult
from kss.models.system import PolynomialMap
from kss.zerocount.base import BaseZeroCounter
from kss.zerocount.circle import CircleCounter
from kss.zerocount.crofton import CroftonEstimator
from kss.zerocount.empirical import empirical_moments, measure_zeros, overlap_pair_count
from kss.zerocount.sphere import NewtonOptions, SphereCounter


def count_zeros_circle(system: PolynomialMap) -> ZeroCountResult:
    """Exact zero count of one equation on S^1."""
    return CircleCounter().count(system)


def count_zeros_sphere(
    system: PolynomialMap, options: Optional[NewtonOptions] = None, seed: Optional[int] = None
) -> ZeroCountResult:
    """Multi-start Newton zero count of K = N >= 2 equations on S^N."""
    return SphereCounter(options).count(system, seed=seed)


def estimate_hausdorff_crofton(
    system: PolynomialMap, n_slices: int = 1, seed: int = 0
) -> ZeroCountResult:
    """Slicing estimate of the zero-set measure for K < N."""
    return CroftonEstimator(n_slices=n_slices).count(system, seed=seed)


__all__ = [
    "BaseZeroCounter",
    "CircleCounter",
    "CroftonEstimator",
    "NewtonOptions",
    "SphereCounter",
    "count_zeros_circle",
    "count_zeros_sphere",
    "empirical_moments",
    "estimate_hausdorff_crofton",
    "measure_zeros",
    "overlap_pair_count",
]
