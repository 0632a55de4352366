"""
Sampling of random polynomial systems and their evaluation on the sphere.

The i.i.d. coefficient tensor of each homogeneous part is never built.
Grouping its entries by monomial gives independent Gaussian coefficients
whose variance is the multinomial count a_p^2 p! / prod(alpha_i!).
"""

from functools import lru_cache
from itertools import combinations_with_replacement
import logging
import math
from typing import Optional, Union

import numpy as np
from scipy.special import comb, gammaln

from kss.exceptions import DomainError, SamplingError
from kss.models.spectrum import SystemSpec
from kss.models.system import PolynomialMap, PolynomialSystem, TangentFrame

logger = logging.getLogger(__name__)

# Above this many monomials per equation the request is refused.
MAX_MONOMIALS = 2_000_000

# Integer factorials are exact and cheap up to this degree.
EXACT_DEGREE_LIMIT = 20

UNIT_TOL = 1e-10

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Accept an int, SeedSequence or Generator and return a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@lru_cache(maxsize=256)
def monomial_exponents(n_vars: int, degree: int) -> np.ndarray:
    """All multi-indices alpha in N^n_vars with |alpha| = degree, shape (M, n_vars)."""
    count = int(comb(n_vars + degree - 1, degree, exact=True))
    if count > MAX_MONOMIALS:
        raise SamplingError(
            f"{count} monomials of degree {degree} in {n_vars} variables "
            f"exceeds the limit {MAX_MONOMIALS}"
        )
    exponents = np.array(
        [
            np.bincount(np.array(combo, dtype=np.int64), minlength=n_vars)
            for combo in combinations_with_replacement(range(n_vars), degree)
        ],
        dtype=np.int64,
    ).reshape(count, n_vars)
    exponents.setflags(write=False)
    return exponents


def multinomial_weights(exponents: np.ndarray, exact: Optional[bool] = None) -> np.ndarray:
    """
    p! / prod(alpha_i!) for each row alpha of exponents.

    Args:
        exponents: Integer array (M, n) with a common row sum p
        exact: Use integer factorials; defaults to True when p <= 20

    Returns:
        Float array (M,)
    """
    exponents = np.atleast_2d(exponents)
    degree = int(exponents[0].sum()) if exponents.size else 0
    if exact is None:
        exact = degree <= EXACT_DEGREE_LIMIT

    if exact:
        top = math.factorial(degree)
        return np.array(
            [top // math.prod(math.factorial(int(a)) for a in alpha) for alpha in exponents],
            dtype=float,
        )
    log_weights = gammaln(degree + 1.0) - gammaln(exponents + 1.0).sum(axis=1)
    return np.exp(log_weights)


def sample_system(spec: SystemSpec, seed: SeedLike = None) -> PolynomialSystem:
    """
    Draw a system whose k-th equation has covariance xi_k(x . y).

    Args:
        spec: Sphere dimension, number of equations and their spectra
        seed: Root seed, SeedSequence or Generator

    Returns:
        PolynomialSystem in the monomial basis, deterministic given the seed
    """
    rng = as_generator(seed)
    n_vars = spec.N + 1
    exponents = []
    coefficients = []

    for spectrum in spec.spectra:
        blocks = []
        draws = []
        for degree, weight in spectrum.terms:
            alphas = monomial_exponents(n_vars, degree)
            std = np.sqrt(weight * multinomial_weights(alphas))
            blocks.append(alphas)
            draws.append(std * rng.standard_normal(alphas.shape[0]))
        exponents.append(np.vstack(blocks))
        coefficients.append(np.concatenate(draws))

    return PolynomialSystem(
        N=spec.N,
        exponents=exponents,
        coefficients=coefficients,
        seed=seed if isinstance(seed, int) else None,
    )


def _check_unit(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    norms = np.linalg.norm(np.atleast_2d(x), axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise DomainError("x", f"points must be unit vectors (norm deviation {np.abs(norms - 1).max():.2e})")
    return x


def eval_system(system: PolynomialMap, x: np.ndarray) -> np.ndarray:
    """
    Evaluate every equation at unit vector(s) x.

    Raises:
        DomainError: If any |x| differs from 1 by more than 1e-10
    """
    x = _check_unit(x)
    if x.shape[-1] != system.n_vars:
        raise DomainError("x", f"expected {system.n_vars} coordinates, got {x.shape[-1]}")
    return system.evaluate(x)


def grad_system(system: PolynomialMap, frame: TangentFrame) -> np.ndarray:
    """
    Gradient matrix on the sphere: entry (k, l) is the derivative of
    equation k along frame vector l. Shape (K, N).
    """
    return system.ambient_gradient(frame.base) @ frame.vectors.T


def random_unit_vectors(n: int, size: int, seed: SeedLike = None) -> np.ndarray:
    """Uniform points on S^{n-1} as normalized Gaussian vectors, shape (size, n)."""
    rng = as_generator(seed)
    X = rng.standard_normal((size, n))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _orthonormal_complement(x: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt of candidate rows against x and each other."""
    basis = [x / np.linalg.norm(x)]
    for v in candidates:
        # Two passes keep the Gram residual near machine precision.
        for _ in range(2):
            for b in basis:
                v = v - (b @ v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
        if len(basis) == x.size:
            break
    return np.array(basis[1:])


def random_tangent_frame(x: np.ndarray, seed: SeedLike = None) -> TangentFrame:
    """
    Orthonormal tangent frame at x, obtained by completing x against the
    columns of a random rotation.
    """
    x = _check_unit(x).ravel()
    x = x / np.linalg.norm(x)
    rng = as_generator(seed)
    rotation, _ = np.linalg.qr(rng.standard_normal((x.size, x.size)))
    return TangentFrame(base=x, vectors=_orthonormal_complement(x, rotation.T))
