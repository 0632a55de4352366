"""
Exact Gaussian moments of polynomial observables and the power series of
Lambda(t) = E f(X_t) f(Y_t) for block-covariance pairs.

Moments follow Isserlis' pairing recursion

    E[x_i x^gamma] = sum_j gamma_j C_ij E[x^(gamma - e_j)]

memoized per covariance matrix. Total pairing degree is capped at 16.
"""

from functools import lru_cache
from itertools import product
import logging
from typing import Sequence

import numpy as np
import pandas as pd
from numpy.polynomial import Chebyshev, Polynomial

from kss.exceptions import DomainError, SeriesCapError
from kss.models.series import BlockPairCovariance, PolyObservable
from kss.montecarlo import mean_estimate, task_rng
from kss.sampler import SeedLike, as_generator

logger = logging.getLogger(__name__)

MAX_PAIRING_DEGREE = 16
MAX_SERIES_DEGREE = 8
NONNEGATIVE_SLACK = 1e-8

_PSD_TOL = 1e-10


def _check_covariance(cov: np.ndarray) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
        raise DomainError("cov", "must be a symmetric square matrix")
    scale = max(1.0, float(np.abs(cov).max()))
    smallest = float(np.linalg.eigvalsh(cov).min())
    if smallest < -_PSD_TOL * scale:
        raise DomainError("cov", f"not positive semi-definite (min eigenvalue {smallest:.3e})")
    return cov


def _moment_function(cov: np.ndarray):
    """Memoized E[x^gamma] for x ~ N(0, cov)."""

    @lru_cache(maxsize=None)
    def moment(gamma: tuple[int, ...]) -> float:
        total = sum(gamma)
        if total == 0:
            return 1.0
        if total % 2:
            return 0.0
        i = next(idx for idx, g in enumerate(gamma) if g > 0)
        rest = list(gamma)
        rest[i] -= 1
        value = 0.0
        for j, count in enumerate(rest):
            if count == 0 or cov[i, j] == 0.0:
                continue
            lowered = rest.copy()
            lowered[j] -= 1
            value += count * cov[i, j] * moment(tuple(lowered))
        return value

    return moment


def gaussian_expectation(f: PolyObservable, cov: np.ndarray) -> float:
    """E f(X) for X ~ N(0, cov)."""
    cov = _check_covariance(cov)
    if f.degree > MAX_PAIRING_DEGREE:
        raise SeriesCapError(f.degree, MAX_PAIRING_DEGREE, "pairing degree")
    moment = _moment_function(cov)
    return float(sum(c * moment(alpha) for alpha, c in f.terms))


def wick_expectation(f: PolyObservable, g: PolyObservable, cov: np.ndarray) -> float:
    """
    E f(X) g(Y) for (X, Y) ~ N(0, cov) with cov of size 2n x 2n.

    Raises:
        DomainError: If cov is not positive semi-definite or shapes disagree
        SeriesCapError: If deg f + deg g exceeds 16
    """
    cov = _check_covariance(cov)
    if f.n != g.n or cov.shape[0] != 2 * f.n:
        raise DomainError("cov", f"expected {2 * f.n}x{2 * f.n} for n={f.n}, got {cov.shape}")
    degree = f.degree + g.degree
    if degree > MAX_PAIRING_DEGREE:
        raise SeriesCapError(degree, MAX_PAIRING_DEGREE, "pairing degree")

    moment = _moment_function(cov)
    total = 0.0
    for alpha, a in f.terms:
        for beta, b in g.terms:
            total += a * b * moment(alpha + beta)
    return float(total)


def lambda_series(bpc: BlockPairCovariance, f: PolyObservable) -> np.ndarray:
    """
    Coefficients alpha_0, ..., alpha_{2d} of Lambda(t) = E f(X_t) f(Y_t).

    Lambda is evaluated exactly at 2d + 1 Chebyshev points and interpolated;
    the interpolant is exact for a polynomial of this degree.

    Raises:
        SeriesCapError: If deg f > 8
    """
    d = f.degree
    if d > MAX_SERIES_DEGREE:
        raise SeriesCapError(d, MAX_SERIES_DEGREE)

    n_points = 2 * d + 1
    nodes = np.polynomial.chebyshev.chebpts1(n_points)
    values = np.array([wick_expectation(f, f, bpc.joint(t)) for t in nodes])
    fit = Chebyshev.fit(nodes, values, deg=n_points - 1, domain=[-1.0, 1.0])
    coef = fit.convert(kind=Polynomial, domain=[-1.0, 1.0], window=[-1.0, 1.0]).coef
    return np.pad(coef, (0, n_points - coef.size))


def _derivative(f: PolyObservable, indices: Sequence[int]) -> PolyObservable:
    for i in indices:
        f = f.partial(i)
    return f


def derivative_vector(f: PolyObservable, k: int, sigma0: np.ndarray) -> np.ndarray:
    """V_k: E of every k-th partial of f under N(0, sigma0), in Kronecker index order."""
    return np.array(
        [gaussian_expectation(_derivative(f, idx), sigma0) for idx in product(range(f.n), repeat=k)]
    )


def derivative_formula(bpc: BlockPairCovariance, f: PolyObservable, k: int) -> float:
    """
    Lambda^(k)(0) = V_k^T (Sigma kron ... kron Sigma) V_k, valid when Sigma_1 = 0.

    Raises:
        DomainError: If Sigma_1 is not zero
    """
    if np.any(bpc.sigma1 != 0.0):
        raise DomainError("sigma1", "the derivative formula needs Sigma_1 = 0")
    V = derivative_vector(f, k, bpc.sigma0)
    kron = np.ones((1, 1))
    for _ in range(k):
        kron = np.kron(kron, bpc.sigma)
    return float(V @ kron @ V)


def derivative_residual(bpc: BlockPairCovariance, f: PolyObservable, k_max: int = 3) -> float:
    """
    Largest relative gap between k! alpha_k from interpolation and the
    derivative formula, for k = 0..k_max. Relative to max(1, |formula|).
    """
    coef = lambda_series(bpc, f)
    worst = 0.0
    factorial = 1.0
    for k in range(k_max + 1):
        if k > 0:
            factorial *= k
        interpolated = factorial * coef[k] if k < coef.size else 0.0
        exact = derivative_formula(bpc, f, k)
        worst = max(worst, abs(interpolated - exact) / max(1.0, abs(exact)))
    return worst


def sigma1_reduction_check(
    bpc: BlockPairCovariance,
    f: PolyObservable,
    n_mc: int,
    seed: SeedLike = 0,
    ts: Sequence[float] = (-1.0, -0.5, 0.0, 0.5, 1.0),
) -> pd.DataFrame:
    """
    Monte Carlo of E f(X_t) f(Y_t) through (X_hat + Z, Y_hat + Z) with
    Z ~ N(0, Sigma_1) independent of (X_hat, Y_hat), against the exact value.

    Returns:
        DataFrame with columns t, estimate, std_error, exact, z_score

    Raises:
        DomainError: If Sigma_0 - Sigma_1 is not positive semi-definite
    """
    _check_covariance(bpc.sigma0 - bpc.sigma1)
    rng = as_generator(seed)
    n = bpc.n
    rows = []
    for t in ts:
        common = rng.multivariate_normal(np.zeros(n), bpc.sigma1, size=n_mc, method="eigh")
        pair = rng.multivariate_normal(np.zeros(2 * n), bpc.reduced(t), size=n_mc, method="eigh")
        X = pair[:, :n] + common
        Y = pair[:, n:] + common
        estimate = mean_estimate(f.evaluate(X) * f.evaluate(Y))
        exact = wick_expectation(f, f, bpc.joint(t))
        rows.append(
            {
                "t": float(t),
                "estimate": estimate.estimate,
                "std_error": estimate.std_error,
                "exact": exact,
                "z_score": estimate.z_score(exact),
            }
        )
    return pd.DataFrame(rows, columns=["t", "estimate", "std_error", "exact", "z_score"])


def random_block_pair(
    n: int, seed: SeedLike = None, zero_sigma1: bool = False
) -> BlockPairCovariance:
    """
    Random triple with Sigma(+-1) positive semi-definite:
    Sigma_1 = B B^T, Sigma = C C^T, Sigma_0 = Sigma_1 + Sigma + D D^T.
    """
    rng = as_generator(seed)
    B, C, D = (rng.standard_normal((n, n)) / np.sqrt(n) for _ in range(3))
    sigma1 = np.zeros((n, n)) if zero_sigma1 else B @ B.T
    sigma = C @ C.T
    sigma0 = sigma1 + sigma + D @ D.T
    return BlockPairCovariance(sigma0=sigma0, sigma1=sigma1, sigma=sigma)


def random_observable(n: int, degree: int, seed: SeedLike = None) -> PolyObservable:
    """Polynomial with standard Gaussian coefficients on every monomial of degree <= degree."""
    rng = as_generator(seed)
    terms = []
    for alpha in product(range(degree + 1), repeat=n):
        if sum(alpha) <= degree:
            terms.append((alpha, float(rng.standard_normal())))
    return PolyObservable(n=n, terms=tuple(terms))


def series_check(
    n_trials: int, seed: int = 0, max_dim: int = 3, max_degree: int = 3
) -> pd.DataFrame:
    """
    Minimum series coefficient over random (Sigma_0, Sigma_1, Sigma, f).

    Trial t draws from the sub-seed for task t; every other trial uses
    Sigma_1 = 0 and also records the derivative-formula residual.

    Returns:
        DataFrame with columns trial, n, degree, min_coefficient, derivative_residual
    """
    rows = []
    for t in range(n_trials):
        rng = task_rng(seed, t)
        n = int(rng.integers(1, max_dim + 1))
        degree = int(rng.integers(1, max_degree + 1))
        zero_sigma1 = t % 2 == 1
        bpc = random_block_pair(n, rng, zero_sigma1=zero_sigma1)
        f = random_observable(n, degree, rng)
        coef = lambda_series(bpc, f)
        residual = derivative_residual(bpc, f) if zero_sigma1 else float("nan")
        rows.append(
            {
                "trial": t,
                "n": n,
                "degree": degree,
                "min_coefficient": float(coef.min()),
                "derivative_residual": residual,
            }
        )
    frame = pd.DataFrame(
        rows, columns=["trial", "n", "degree", "min_coefficient", "derivative_residual"]
    )
    logger.info(
        f"Series check over {n_trials} trials: min coefficient {frame['min_coefficient'].min():.3e}"
    )
    return frame
