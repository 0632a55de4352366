"""
Closed-form moments of zero sets and the analytic pieces of the
second-moment bounds: chi moments, lambda, Phi, C_{N,K} and the
near-orthogonal concentration pipeline.

All gamma-function ratios are evaluated as exponentials of log-gamma
differences so that large N does not overflow.
"""

import logging
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.special import gammaln

from kss import spectrum as sp
from kss.exceptions import DomainError, EndpointSingularityError
from kss.models.reports import MomentReport
from kss.models.spectrum import MixedSpectrum, SystemSpec
from kss.quadrature import (
    DEFAULT_NODES,
    DEFAULT_RTOL,
    QuadratureKind,
    QuadratureResult,
    integrate,
    make_rule,
)

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))


# ----------------------------------------------------------------------------
# Sphere volumes and chi moments
# ----------------------------------------------------------------------------


def log_sphere_volume(d: int) -> float:
    """log Vol(S^{d-1}) = log(2 pi^{d/2} / Gamma(d/2))."""
    if d < 1:
        raise DomainError("d", f"ambient dimension must be >= 1, got {d}")
    return float(np.log(2.0) + 0.5 * d * np.log(np.pi) - gammaln(0.5 * d))


def sphere_volume(d: int) -> float:
    """
    Surface area of the unit sphere S^{d-1} in R^d.

    Args:
        d: Ambient dimension, at least 1

    Returns:
        2 pi^{d/2} / Gamma(d/2); 2 for d = 1

    Raises:
        DomainError: If d <= 0
    """
    return float(np.exp(log_sphere_volume(d)))


def _check_dof(j: int) -> None:
    if j < 1:
        raise DomainError("j", f"chi degrees of freedom must be >= 1, got {j}")


def log_chi_mean(j: int) -> float:
    _check_dof(j)
    return float(0.5 * np.log(2.0) + gammaln(0.5 * (j + 1)) - gammaln(0.5 * j))


def chi_mean(j: int) -> float:
    """E chi_j = sqrt(2) Gamma((j+1)/2) / Gamma(j/2)."""
    return float(np.exp(log_chi_mean(j)))


def chi_sq_mean(j: int) -> float:
    """E chi_j^2 = j."""
    _check_dof(j)
    return float(j)


def _check_system_shape(N: int, K: int) -> None:
    if N < 1 or not 1 <= K <= N:
        raise DomainError("K", f"need 1 <= K <= N, got N={N}, K={K}")


def log_ej_squared(N: int, K: int) -> float:
    _check_system_shape(N, K)
    return 2.0 * sum(log_chi_mean(N - k) for k in range(K))


def ej_squared(N: int, K: int) -> float:
    """(E J(M))^2 = prod_{k=0}^{K-1} (E chi_{N-k})^2 for an i.i.d. Gaussian K x N matrix."""
    return float(np.exp(log_ej_squared(N, K)))


def chi_moment_product(N: int, K: int) -> float:
    """E J(M)^2 = prod_{k=0}^{K-1} E chi_{N-k}^2 = N! / (N-K)!."""
    _check_system_shape(N, K)
    return float(np.exp(gammaln(N + 1.0) - gammaln(N - K + 1.0)))


def mnd_identity_residual(N: int, K: int) -> float:
    """
    Relative residual of Vol(S^N) E J (2 pi)^{-K/2} = Vol(S^{N-K}).

    The identity is the first-moment formula for K independent linear
    forms, whose zero set is a great subsphere.
    """
    log_lhs = 0.5 * log_ej_squared(N, K) + log_sphere_volume(N + 1) - 0.5 * K * LOG_2PI
    return float(abs(np.expm1(log_lhs - log_sphere_volume(N - K + 1))))


def eta0_bound(N: int, K: int) -> float:
    """Cauchy-Schwarz bound E chi_N^2 prod_{k=1}^{K-1} (E chi_{N-k})^2 on eta(0)."""
    _check_system_shape(N, K)
    log_rest = 2.0 * sum(log_chi_mean(N - k) for k in range(1, K))
    return float(N * np.exp(log_rest))


def chi_ratio_bound(N: int, K: int, r: float) -> float:
    """
    Non-asymptotic bound on D(r) / (E J)^2:
    E chi_N^2 / (E chi_N)^2 + r^2 prod E chi_{N-k}^2 / prod (E chi_{N-k})^2.
    """
    _check_system_shape(N, K)
    ratio = np.exp(np.log(chi_moment_product(N, K)) - log_ej_squared(N, K))
    return float(N / chi_mean(N) ** 2 + r**2 * ratio)


def dbar_bound(N: int, r: float) -> float:
    """
    Asymptotic bound 1 + 1/(N-1) + r^2 sqrt(N pi / 2) on D(r) / (E J)^2.

    Raises:
        DomainError: If N < 2 or |r| >= 1
    """
    if N < 2:
        raise DomainError("N", f"dbar_bound needs N >= 2, got {N}")
    if abs(r) >= 1.0:
        raise DomainError("r", f"need |r| < 1, got {r}")
    return 1.0 + 1.0 / (N - 1) + r**2 * np.sqrt(N * np.pi / 2.0)


# ----------------------------------------------------------------------------
# First moment
# ----------------------------------------------------------------------------


def expected_zero_measure(spec: SystemSpec) -> MomentReport:
    """
    Expected number (K = N) or (N-K)-dimensional measure (K < N) of the zero set.

    Returns:
        MomentReport with first_moment = Vol(S^{N-K}) prod_k sqrt(xi_k'(1) / xi_k(1))
    """
    factors = tuple(
        float(np.sqrt(sp.xi_eval(s, 1.0, order=1) / sp.xi_eval(s, 1.0))) for s in spec.spectra
    )
    volume = sphere_volume(spec.N - spec.K + 1)
    return MomentReport(
        N=spec.N,
        K=spec.K,
        first_moment=volume * float(np.prod(factors)),
        factors=factors,
        volume_factor=volume,
    )


def second_moment_atoms(spec: SystemSpec, interval: tuple[float, float] = (-1.0, 1.0)) -> float:
    """
    Contribution of the overlaps r = 1 and r = -1 to E Z^2.

    For K = N the diagonal pairs contribute E Z; antipodal pairs contribute
    E Z as well when every equation is even or odd. For K < N both sets of
    pairs are null. Only the endpoints the interval reaches are counted.
    """
    a, b = interval
    if not spec.is_square:
        return 0.0
    first = expected_zero_measure(spec).first_moment
    diagonal = first if b >= 1.0 else 0.0
    antipodal = first if a <= -1.0 and all(s.is_parity_pure for s in spec.spectra) else 0.0
    return diagonal + antipodal


# ----------------------------------------------------------------------------
# Conditional deflation and the Cauchy-Schwarz bound
# ----------------------------------------------------------------------------


def lambda_k(spec_k: MixedSpectrum, r: float) -> float:
    """
    Conditional last-column variance factor lambda(r) in [0, 1].

    Evaluated with (1 - r^2) / (xi(1)^2 - xi(r)^2) in log space.

    Raises:
        SingularOverlapError: If |r| >= 1 - 1e-12
    """
    r = sp.check_overlap(r)
    d1 = sp.xi_eval(spec_k, r, order=1)
    if d1 == 0.0:
        return 1.0
    log_term = (
        np.log(sp.xi_eval(spec_k, 1.0))
        - np.log(sp.xi_eval(spec_k, 1.0, order=1))
        + 2.0 * np.log(abs(d1))
        + sp.log_overlap_factor(spec_k, r)
    )
    return float(np.clip(1.0 - np.exp(log_term), 0.0, 1.0))


def lambda_upper_bound(spec_k: MixedSpectrum, r: float) -> float:
    """1 - xi'(r)^2 (1 + r) / (2 xi'(1)^2), an upper bound on lambda(r)."""
    d1 = sp.xi_eval(spec_k, 1.0, order=1)
    dr = sp.xi_eval(spec_k, r, order=1)
    return float(1.0 - dr**2 * (1.0 + r) / (2.0 * d1**2))


def phi(spec: SystemSpec, r: float) -> float:
    """Phi_{N,K}(r) = (N - K + sum_k lambda_k(r)) / N."""
    total = sum(lambda_k(s, r) for s in spec.spectra)
    return (spec.N - spec.K + total) / spec.N


def log_kr2_constant(N: int, K: int) -> float:
    """log C_{N,K} = log(Vol(S^N) Vol(S^{N-1}) (2 pi)^{-K})."""
    _check_system_shape(N, K)
    return log_sphere_volume(N + 1) + log_sphere_volume(N) - K * LOG_2PI


def kr2_constant(N: int, K: int) -> float:
    return float(np.exp(log_kr2_constant(N, K)))


def _log_bound_weight(spec: SystemSpec, r: float) -> float:
    """log of prod_k (xi_k'(1)^2 (1-r^2) / gap_k)^{1/2} (1-r^2)^{(N-K-2)/2}."""
    total = sum(
        np.log(sp.xi_eval(s, 1.0, order=1)) + 0.5 * sp.log_overlap_factor(s, r)
        for s in spec.spectra
    )
    return float(total + 0.5 * (spec.N - spec.K - 2) * (np.log1p(-r) + np.log1p(r)))


def variance_bound_integrand(spec: SystemSpec, r: float, use_phi: bool = True) -> float:
    """Integrand of the Cauchy-Schwarz second-moment bound, without its constant."""
    r = sp.check_overlap(r)
    factor = phi(spec, r) if use_phi else 1.0
    if factor == 0.0:
        return 0.0
    return float(np.exp(_log_bound_weight(spec, r)) * factor)


def check_interval(
    spec: SystemSpec, interval: tuple[float, float], kind: QuadratureKind, use_phi: bool = True
) -> None:
    """Reject intervals outside [-1, 1] and K = N endpoints the rule cannot integrate."""
    a, b = interval
    if not -1.0 <= a < b <= 1.0:
        raise DomainError("interval", f"need -1 <= a < b <= 1, got [{a}, {b}]")
    touches = a <= -1.0 or b >= 1.0
    if touches and spec.is_square and (kind is not QuadratureKind.THETA or not use_phi):
        # Without Phi the K = N integrand grows like 1 / (1 - r^2) and is not integrable.
        raise EndpointSingularityError((a, b))


def variance_upper_bound_quadrature(
    spec: SystemSpec,
    interval: tuple[float, float] = (-1.0, 1.0),
    kind: QuadratureKind | str = QuadratureKind.THETA,
    n_nodes: int = DEFAULT_NODES,
    use_phi: bool = True,
    rtol: float = DEFAULT_RTOL,
) -> tuple[float, QuadratureResult]:
    """
    Evaluate the Cauchy-Schwarz bound and keep the quadrature it used.

    Returns:
        (bound, quadrature result of the integral without the constant)
    """
    kind = QuadratureKind(kind)
    check_interval(spec, interval, kind, use_phi)
    result = integrate(
        lambda r: variance_bound_integrand(spec, r, use_phi),
        interval=interval,
        kind=kind,
        n_nodes=n_nodes,
        rtol=rtol,
    )
    log_constant = log_kr2_constant(spec.N, spec.K) + gammaln(spec.N + 1.0) - gammaln(
        spec.N - spec.K + 1.0
    )
    return float(np.exp(log_constant) * result.value), result


def variance_upper_bound(
    spec: SystemSpec,
    interval: tuple[float, float] = (-1.0, 1.0),
    kind: QuadratureKind | str = QuadratureKind.THETA,
    n_nodes: int = DEFAULT_NODES,
    use_phi: bool = True,
    rtol: float = DEFAULT_RTOL,
) -> float:
    """
    Upper bound on E Z^(2)(I), the second factorial moment restricted to
    overlaps in I = [a, b].

    Args:
        spec: System specification
        interval: Overlap interval inside [-1, 1]
        kind: Quadrature rule; "theta" is required when K = N and I touches +-1
        n_nodes: Starting node count (doubled until converged)
        use_phi: Replace Phi by 1 when False, which can only increase the bound
        rtol: Relative tolerance between successive node doublings

    Raises:
        EndpointSingularityError: If K = N, I touches +-1 and either kind is
            "legendre" or use_phi is False
    """
    bound, _ = variance_upper_bound_quadrature(spec, interval, kind, n_nodes, use_phi, rtol)
    return bound


def variance_ratio_bound(spec: SystemSpec, **kwargs) -> float:
    """(bound over (-1, 1) + atoms - (E Z)^2) / (E Z)^2."""
    first = expected_zero_measure(spec).first_moment
    interior = variance_upper_bound(spec, (-1.0, 1.0), **kwargs)
    return (interior + second_moment_atoms(spec) - first**2) / first**2


def variance_bound_table(spec: SystemSpec, rule_nodes: Sequence[float]) -> pd.DataFrame:
    """Per-node diagnostics with columns r, integrand, phi, density."""
    rows = []
    for r in rule_nodes:
        rows.append(
            {
                "r": float(r),
                "integrand": variance_bound_integrand(spec, r),
                "phi": phi(spec, r),
                "density": sp.density_at_zero(spec.spectra, r),
            }
        )
    return pd.DataFrame(rows, columns=["r", "integrand", "phi", "density"])


def concentration_bound(
    spec: SystemSpec,
    interval: tuple[float, float] = (-1.0, 1.0),
    n_nodes: int = DEFAULT_NODES,
    rtol: float = DEFAULT_RTOL,
) -> float:
    """
    Near-orthogonal bound on Var(Z / E Z):

        sqrt(N / 2 pi) * int dbar(N, r) (1 - r^2)^{N/2} prod_k (1 - nu_k(r)^2)^{-1/2} dr - 1

    Requires N >= 2.
    """
    N = spec.N

    def integrand(r: float) -> float:
        log_weight = 0.5 * (N - spec.K) * (np.log1p(-r) + np.log1p(r))
        log_weight += 0.5 * sum(np.log(sp.overlap_ratio(s, r)) for s in spec.spectra)
        return dbar_bound(N, r) * float(np.exp(log_weight))

    result = integrate(integrand, interval=interval, kind=QuadratureKind.THETA, n_nodes=n_nodes, rtol=rtol)
    return float(np.sqrt(N / (2.0 * np.pi)) * result.value - 1.0)


# ----------------------------------------------------------------------------
# Blow-up example with one high-degree perturbation
# ----------------------------------------------------------------------------


def blowup_spectrum(p: int) -> MixedSpectrum:
    """
    xi(t) = t^2 + (log p / p) t^p.

    Raises:
        DomainError: If p < 3
    """
    if p < 3:
        raise DomainError("p", f"need p >= 3, got {p}")
    return MixedSpectrum(terms=((2, 1.0), (int(p), float(np.log(p) / p))))


def blowup_system(p: int, N: int) -> SystemSpec:
    """K = N system with the blow-up spectrum first and t^2 elsewhere."""
    spectra = [blowup_spectrum(p)] + [MixedSpectrum.monomial(2)] * (N - 1)
    return SystemSpec(N=N, K=N, spectra=tuple(spectra))


def overlap_factor_m(spec_k: MixedSpectrum, r: float) -> float:
    """M_k(r) = ((1 - r^2) / (1 - nu_k(r)^2))^{1/2}."""
    return float(np.sqrt(sp.overlap_ratio(spec_k, r)))


def blowup_diagnostics(p: int, N: int, n_grid: int = 200) -> pd.DataFrame:
    """
    Sampled check of M_1(r) L(r) >= (4 N (1 - r^2))^{-1} on (1/2, 1 - 2 log p / p).

    Returns:
        DataFrame with columns r, M1, L, M1L, lower_bound, holds
    """
    upper = 1.0 - 2.0 * np.log(p) / p
    if upper <= 0.5:
        raise DomainError("p", f"window (1/2, {upper:.4f}) is empty; p={p} is too small")

    system = blowup_system(p, N)
    grid = np.linspace(0.5, upper, n_grid + 2)[1:-1]
    rows = []
    for r in grid:
        m1 = overlap_factor_m(system.spectra[0], r)
        L = phi(system, r) / (1.0 - r**2)
        lower = 1.0 / (4.0 * N * (1.0 - r**2))
        rows.append(
            {
                "r": float(r),
                "M1": m1,
                "L": L,
                "M1L": m1 * L,
                "lower_bound": lower,
                "holds": bool(m1 * L >= lower),
            }
        )
    logger.debug(f"Blow-up diagnostics for p={p}, N={N} on {len(rows)} points")
    return pd.DataFrame(rows, columns=["r", "M1", "L", "M1L", "lower_bound", "holds"])


def rest_overlap_product(N: int, r: float) -> float:
    """prod_{k>=2} M_k(r) for xi_k = t^2, equal to (1 + r^2)^{-(N-1)/2}."""
    return overlap_factor_m(MixedSpectrum.monomial(2), r) ** (N - 1)
