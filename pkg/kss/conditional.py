"""
Two-point conditional Gaussian structure of values and gradients, the
Jacobian functional J, and Monte Carlo estimation of D(r), eta(r) and the
full second moment.

Frame convention: x = e_N and y = (0, ..., sqrt(1 - r^2), r). Index N of
the tangent frame is the direction in the plane of x and y.
"""

import logging
import time
from typing import Optional

import numpy as np
from scipy import linalg

import kss
from kss import moments
from kss import spectrum as sp
from kss.exceptions import (
    DomainError,
    ModelError,
    SingularOverlapError,
)
from kss.models.conditional import (
    ConditionalGradientTable,
    ConditionalPairModel,
    JointValueGradientCovariance,
)
from kss.models.reports import KacRiceNode, KacRiceReport, MonteCarloEstimate
from kss.models.spectrum import MixedSpectrum, SystemSpec
from kss.montecarlo import MomentAccumulator, map_tasks, split_samples, task_int_seed, task_rng
from kss.quadrature import DEFAULT_NODES, QuadratureKind, make_rule
from kss.sampler import SeedLike, as_generator

logger = logging.getLogger(__name__)

# Default guard for direct D(r) and eta(r) queries.
MAX_OVERLAP = 0.999

MIN_SAMPLES = 100
CHUNK = 20_000

# Blocks whose smallest eigenvalue is below -PSD_TOL are rejected.
PSD_TOL = 1e-10


def _overlap_terms(spec_k: MixedSpectrum, r: float) -> dict[str, float]:
    """xi and its derivatives at 1 and r, plus the factor (1 - r^2) / gap."""
    return {
        "x1": sp.xi_eval(spec_k, 1.0),
        "d1": sp.xi_eval(spec_k, 1.0, order=1),
        "xr": sp.xi_eval(spec_k, r),
        "dr": sp.xi_eval(spec_k, r, order=1),
        "ddr": sp.xi_eval(spec_k, r, order=2),
        "ratio": float(np.exp(sp.log_overlap_factor(spec_k, r))),
    }


def joint_covariance(spec_k: MixedSpectrum, r: float, N: int) -> JointValueGradientCovariance:
    """
    Covariance of (f(x), f(y), grad f(x), grad f(y)) for one equation.

    Raises:
        SingularOverlapError: If |r| >= 1 - 1e-12
    """
    r = sp.check_overlap(r)
    if N < 1:
        raise DomainError("N", f"must be >= 1, got {N}")
    t = _overlap_terms(spec_k, r)
    s = np.sqrt((1.0 - r) * (1.0 + r))

    size = 2 * N + 2
    C = np.zeros((size, size))
    C[0, 0] = C[1, 1] = t["x1"]
    C[0, 1] = C[1, 0] = t["xr"]

    gx = 2 + np.arange(N)
    gy = gx + N
    C[gx, gx] = t["d1"]
    C[gy, gy] = t["d1"]
    C[gx[:-1], gy[:-1]] = C[gy[:-1], gx[:-1]] = t["dr"]
    C[gx[-1], gy[-1]] = C[gy[-1], gx[-1]] = r * t["dr"] - t["ddr"] * (1.0 - r**2)

    # E f(y) E_N f(x) = -E f(x) E_N f(y) = xi'(r) sqrt(1 - r^2)
    C[1, gx[-1]] = C[gx[-1], 1] = t["dr"] * s
    C[0, gy[-1]] = C[gy[-1], 0] = -t["dr"] * s
    return JointValueGradientCovariance(N=N, r=r, matrix=C)


def conditional_gradient_covariance(
    spec_k: MixedSpectrum, r: float, N: int
) -> ConditionalGradientTable:
    """
    Covariances of the gradients at x and y given f(x) = f(y) = 0.

    Index i < N: variance xi'(1), cross xi'(r). Index N: both are reduced by
    xi'(r)^2 (1 - r^2) / (xi(1)^2 - xi(r)^2) times xi(1) and xi(r).
    """
    r = sp.check_overlap(r)
    t = _overlap_terms(spec_k, r)
    reduction = t["dr"] ** 2 * t["ratio"]

    variance = np.full(N, t["d1"])
    cross = np.full(N, t["dr"])
    variance[-1] = t["d1"] - reduction * t["x1"]
    cross[-1] = r * t["dr"] - t["ddr"] * (1.0 - r**2) - reduction * t["xr"]
    return ConditionalGradientTable(N=N, r=r, variance=variance, cross=cross)


def schur_conditional(matrix: np.ndarray, given: np.ndarray) -> np.ndarray:
    """
    Covariance of the remaining coordinates given the coordinates in `given`:
    S_11 - S_12 S_22^{-1} S_21.
    """
    given = np.asarray(given)
    mask = np.zeros(matrix.shape[0], dtype=bool)
    mask[given] = True
    S22 = matrix[np.ix_(mask, mask)]
    S12 = matrix[np.ix_(~mask, mask)]
    factor = linalg.cho_factor(S22)
    return matrix[np.ix_(~mask, ~mask)] - S12 @ linalg.cho_solve(factor, S12.T)


def conditional_pair_model(spec: SystemSpec, r: float) -> ConditionalPairModel:
    """Normalized conditional gradient law (each block divided by xi_k'(1))."""
    r = sp.check_overlap(r)
    diagonal = np.ones((spec.K, spec.N))
    cross = np.zeros((spec.K, spec.N))
    for k, spec_k in enumerate(spec.spectra):
        table = conditional_gradient_covariance(spec_k, r, spec.N)
        d1 = sp.xi_eval(spec_k, 1.0, order=1)
        diagonal[k] = table.variance / d1
        diagonal[k, -1] = moments.lambda_k(spec_k, r)
        cross[k] = table.cross / d1
    return ConditionalPairModel(N=spec.N, K=spec.K, r=r, diagonal=diagonal, cross=cross)


def sample_conditional_pair(
    model: ConditionalPairModel, seed: SeedLike = None, size: Optional[int] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Draw (M1, M2) with the model's 2x2 blocks.

    Args:
        model: Conditional pair law
        seed: Seed or Generator
        size: Number of pairs; None for a single pair of K x N matrices

    Returns:
        Two arrays of shape (K, N), or (size, K, N)

    Raises:
        ModelError: If a block is not positive semi-definite
    """
    if model.min_eigenvalue < -PSD_TOL:
        raise ModelError(
            "conditional pair model",
            f"block not positive semi-definite at r={model.r} "
            f"(min eigenvalue {model.min_eigenvalue:.3e})",
        )
    rng = as_generator(seed)
    shape = (model.K, model.N) if size is None else (size, model.K, model.N)
    z1 = rng.standard_normal(shape)
    z2 = rng.standard_normal(shape)

    v = np.maximum(model.diagonal, 0.0)
    root_v = np.sqrt(v)
    loading = np.divide(model.cross, root_v, out=np.zeros_like(v), where=root_v > 0)
    residual = np.sqrt(np.maximum(v - loading**2, 0.0))

    m1 = root_v * z1
    m2 = loading * z1 + residual * z2
    return m1, m2


def jdet(A: np.ndarray) -> np.ndarray:
    """
    J(A) = sqrt(det(A A^T)) as the product of the norms of the successive
    row projections (modified Gram-Schmidt). Accepts a batch (..., K, N).

    Raises:
        DomainError: If K > N
    """
    A = np.asarray(A, dtype=float)
    single = A.ndim == 1
    if single:
        A = A[None, :]
    K, N = A.shape[-2:]
    if K > N:
        raise DomainError("A", f"J needs K <= N, got a {K}x{N} matrix")

    basis = []
    result = np.ones(A.shape[:-2])
    for k in range(K):
        v = A[..., k, :].copy()
        for _ in range(2):
            for q in basis:
                v -= np.sum(q * v, axis=-1, keepdims=True) * q
        theta = np.linalg.norm(v, axis=-1)
        result = result * theta
        basis.append(np.divide(v, theta[..., None], out=np.zeros_like(v), where=theta[..., None] > 0))
    return result if A.ndim > 2 else float(result)


def _check_direct_overlap(r: float, max_overlap: float) -> float:
    r = float(r)
    if abs(r) > max_overlap:
        raise SingularOverlapError(r, max_overlap)
    return sp.check_overlap(r)


def _pair_product_mc(
    model: ConditionalPairModel, n_samples: int, seed: int, chunk: int = CHUNK
) -> MonteCarloEstimate:
    """Mean of J(M1) J(M2) over n_samples draws, chunked by counter-based sub-seeds."""
    accumulator = MomentAccumulator()
    for chunk_id, size in enumerate(split_samples(n_samples, chunk)):
        m1, m2 = sample_conditional_pair(model, task_rng(seed, chunk_id), size=size)
        accumulator.add(jdet(m1) * jdet(m2))
    return accumulator.estimate()


def _check_samples(n_samples: int) -> None:
    if n_samples < MIN_SAMPLES:
        raise DomainError("n_samples", f"need at least {MIN_SAMPLES}, got {n_samples}")


def d_of_r_mc(
    spec: SystemSpec,
    r: float,
    n_samples: int,
    seed: int = 0,
    max_overlap: float = MAX_OVERLAP,
) -> MonteCarloEstimate:
    """
    Monte Carlo estimate of D(r) = E[J(M1) J(M2)] under the conditional law.

    Unpacks as (estimate, std_error).

    Raises:
        SingularOverlapError: If |r| > max_overlap
        ModelError: If the conditional model is numerically invalid
    """
    r = _check_direct_overlap(r, max_overlap)
    _check_samples(n_samples)
    return _pair_product_mc(conditional_pair_model(spec, r), n_samples, seed)


def eta_mc(
    spec: SystemSpec,
    r: float,
    n_samples: int,
    seed: int = 0,
    max_overlap: float = MAX_OVERLAP,
) -> MonteCarloEstimate:
    """
    Monte Carlo estimate of eta(r), the D(r) analogue in which each last
    column is topped up to unit variance by independent noise.
    """
    r = _check_direct_overlap(r, max_overlap)
    _check_samples(n_samples)
    return _pair_product_mc(conditional_pair_model(spec, r).hatted(), n_samples, seed)


def log_kr2_weight(spec: SystemSpec, r: float) -> float:
    """log of prod_k (xi_k'(1)^2 / gap_k)^{1/2} (1 - r^2)^{(N-2)/2}, stable near |r| = 1."""
    total = 0.0
    for s in spec.spectra:
        total += np.log(sp.xi_eval(s, 1.0, order=1)) - 0.5 * np.log(sp.xi_gap(s, r))
    return float(total + 0.5 * (spec.N - 2) * (np.log1p(-r) + np.log1p(r)))


def second_moment_mc(
    spec: SystemSpec,
    n_nodes: int = DEFAULT_NODES,
    n_samples_per_node: int = 10_000,
    seed: int = 0,
    kind: QuadratureKind | str = QuadratureKind.THETA,
    threads: int = 1,
    interval: tuple[float, float] = (-1.0, 1.0),
) -> KacRiceReport:
    """
    Estimate E Z^2 from the Kac-Rice integral with Monte Carlo D(r) at each
    quadrature node, plus the atoms at r = +-1 that the interval reaches.

    Args:
        spec: System specification
        n_nodes: Fixed number of quadrature nodes on the interval
        n_samples_per_node: Monte Carlo draws for each D(r)
        seed: Root seed; node i uses the sub-seed for task i
        kind: Quadrature rule; "theta" is required when K = N and the interval touches +-1
        threads: Worker threads over nodes (results do not depend on it)
        interval: Overlaps [a, b] to integrate over; pairs with x . y outside are left out

    Returns:
        KacRiceReport with per-node diagnostics and the variance ratio
    """
    started = time.perf_counter()
    kind = QuadratureKind(kind)
    moments.check_interval(spec, interval, kind)
    _check_samples(n_samples_per_node)

    rule = make_rule(n_nodes, interval, kind)
    log_constant = moments.log_kr2_constant(spec.N, spec.K)

    def evaluate_node(i: int) -> tuple[float, MonteCarloEstimate, float]:
        r = float(rule.nodes[i])
        model = conditional_pair_model(spec, r)
        estimate = _pair_product_mc(model, n_samples_per_node, task_int_seed(seed, i))
        scale = float(np.exp(log_constant + log_kr2_weight(spec, r)))
        logger.debug(f"Node {i}: r={r:.6f}, D={estimate.estimate:.6g} +- {estimate.std_error:.2g}")
        return r, estimate, scale

    results = map_tasks(evaluate_node, range(rule.n_nodes), threads=threads)

    nodes = []
    cumulative = 0.0
    variance = 0.0
    for weight, (r, estimate, scale) in zip(rule.weights, results):
        contribution = weight * scale * estimate.estimate
        cumulative += contribution
        variance += (weight * scale * estimate.std_error) ** 2
        nodes.append(
            KacRiceNode(
                r=r,
                weight=float(weight),
                D_hat=estimate.estimate,
                D_se=estimate.std_error,
                integrand=scale * estimate.estimate,
                cumulative=cumulative,
            )
        )

    report = KacRiceReport(
        N=spec.N,
        K=spec.K,
        first_moment=moments.expected_zero_measure(spec).first_moment,
        interior=MonteCarloEstimate(
            estimate=cumulative,
            std_error=float(np.sqrt(variance)),
            n_samples=n_samples_per_node * rule.n_nodes,
        ),
        atoms=moments.second_moment_atoms(spec, interval),
        nodes=nodes,
        seed=seed,
        wall_time=time.perf_counter() - started,
        version=kss.__version__,
    )
    logger.info(
        f"Second moment for N={spec.N}, K={spec.K}: "
        f"{report.second_moment.estimate:.6g} +- {report.second_moment.std_error:.2g} "
        f"(variance ratio {report.variance_ratio.estimate:.4g})"
    )
    return report
