"""Evaluation of covariance polynomials and their two-point quantities."""

from typing import Sequence

import numpy as np

from kss.exceptions import DomainError, SingularOverlapError
from kss.models.spectrum import MixedSpectrum

# |r| at or beyond this is treated as singular: Sigma(r) is rank deficient.
SINGULAR_OVERLAP = 1.0 - 1e-12

_T_SLACK = 1e-12


def check_overlap(r: float, limit: float = SINGULAR_OVERLAP) -> float:
    """Return r as float, raising SingularOverlapError when |r| >= limit."""
    r = float(r)
    if not np.isfinite(r) or abs(r) >= limit:
        raise SingularOverlapError(r, limit)
    return r


def _check_t(t: np.ndarray) -> np.ndarray:
    if np.any(np.abs(t) > 1.0 + _T_SLACK) or not np.all(np.isfinite(t)):
        raise DomainError("t", "covariance polynomials are evaluated on [-1, 1]")
    return np.clip(t, -1.0, 1.0)


def xi_eval(spec: MixedSpectrum, t, order: int = 0):
    """
    Evaluate xi(t), xi'(t) or xi''(t).

    Args:
        spec: Covariance spectrum
        t: Scalar or array with |t| <= 1
        order: Derivative order, one of 0, 1, 2

    Returns:
        Float for scalar input, array otherwise

    Raises:
        DomainError: If |t| > 1 or order is not 0, 1 or 2
    """
    if order not in (0, 1, 2):
        raise DomainError("order", f"must be 0, 1 or 2, got {order}")

    scalar = np.ndim(t) == 0
    t = _check_t(np.atleast_1d(np.asarray(t, dtype=float)))

    p = spec.degrees.astype(float)
    w = spec.weights
    if order == 0:
        coef = w
    elif order == 1:
        coef = w * p
    else:
        coef = w * p * (p - 1.0)

    powers = t[:, None] ** (p - order)[None, :]
    values = powers @ coef
    return float(values[0]) if scalar else values


def nu_eval(spec: MixedSpectrum, t):
    """Normalized covariance nu(t) = xi(t) / xi(1)."""
    scalar = np.ndim(t) == 0
    values = np.atleast_1d(xi_eval(spec, np.atleast_1d(t))) / xi_eval(spec, 1.0)
    return float(values[0]) if scalar else values


def _one_minus_power(r: float, p: int) -> float:
    """1 - r^p without cancellation near |r| = 1."""
    a = abs(r)
    if a == 0.0:
        return 1.0
    if r > 0 or p % 2 == 0:
        return float(-np.expm1(p * np.log(a)))
    return 1.0 + a**p


def _one_plus_power(r: float, p: int) -> float:
    """1 + r^p without cancellation near r = -1."""
    a = abs(r)
    if a == 0.0:
        return 1.0
    if r < 0 and p % 2 == 1:
        return float(-np.expm1(p * np.log(a)))
    return 1.0 + a**p


def xi_gap(spec: MixedSpectrum, r: float) -> float:
    """xi(1)^2 - xi(r)^2 in factored form (xi(1) - xi(r)) (xi(1) + xi(r))."""
    minus = sum(w * _one_minus_power(r, p) for p, w in spec.active_terms)
    plus = sum(w * _one_plus_power(r, p) for p, w in spec.active_terms)
    return minus * plus


def log_overlap_factor(spec: MixedSpectrum, r: float) -> float:
    """log of (1 - r^2) / (xi(1)^2 - xi(r)^2)."""
    r = check_overlap(r)
    return float(np.log1p(-r) + np.log1p(r) - np.log(xi_gap(spec, r)))


def nu_gap(spec: MixedSpectrum, r: float) -> float:
    """1 - nu(r)^2."""
    return xi_gap(spec, r) / xi_eval(spec, 1.0) ** 2


def overlap_ratio(spec: MixedSpectrum, r: float) -> float:
    """(1 - r^2) / (1 - nu(r)^2); bounded by 1 / (1 + r^2)."""
    return float(np.exp(log_overlap_factor(spec, r)) * xi_eval(spec, 1.0) ** 2)


def pair_covariance(spec: MixedSpectrum, r: float) -> np.ndarray:
    """
    Covariance of (f(x), f(y)) at overlap r.

    Raises:
        SingularOverlapError: If |r| >= 1 - 1e-12
    """
    r = check_overlap(r)
    x1 = xi_eval(spec, 1.0)
    xr = xi_eval(spec, r)
    return np.array([[x1, xr], [xr, x1]])


def density_at_zero(spectra: Sequence[MixedSpectrum], r: float) -> float:
    """
    Gaussian density of (f_K(x), f_K(y)) at the origin.

    Equals (2 pi)^-K prod_k (xi_k(1)^2 - xi_k(r)^2)^-1/2.
    """
    r = check_overlap(r)
    log_density = -len(spectra) * np.log(2.0 * np.pi)
    log_density -= 0.5 * sum(np.log(xi_gap(s, r)) for s in spectra)
    return float(np.exp(log_density))
