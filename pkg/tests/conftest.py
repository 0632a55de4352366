"""Pytest fixtures for kostlan-zeros tests."""

import numpy as np
import pytest

from kss.models.spectrum import MixedSpectrum, SystemSpec


@pytest.fixture
def quadratic() -> MixedSpectrum:
    """xi(t) = t^2."""
    return MixedSpectrum.monomial(2)


@pytest.fixture
def cubic() -> MixedSpectrum:
    """xi(t) = t^3."""
    return MixedSpectrum.monomial(3)


@pytest.fixture
def mixed() -> MixedSpectrum:
    """xi(t) = t^2 + t^4."""
    return MixedSpectrum(terms=((2, 1.0), (4, 1.0)))


@pytest.fixture
def circle_cubic(cubic) -> SystemSpec:
    """One cubic equation on S^1."""
    return SystemSpec(N=1, K=1, spectra=(cubic,))


@pytest.fixture
def square_mixed_degrees() -> SystemSpec:
    """N = K = 2 with degrees (2, 3)."""
    return SystemSpec.homogeneous(2, [2, 3])


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator for test inputs."""
    return np.random.default_rng(20240601)


def random_spectrum(rng: np.random.Generator, max_terms: int = 4, max_degree: int = 12) -> MixedSpectrum:
    """Random sparse spectrum with distinct degrees >= 2 and positive weights."""
    n_terms = int(rng.integers(1, max_terms + 1))
    degrees = rng.choice(np.arange(2, max_degree + 1), size=n_terms, replace=False)
    weights = rng.uniform(0.1, 2.0, size=n_terms)
    return MixedSpectrum(terms=tuple(zip(degrees.tolist(), weights.tolist())))
