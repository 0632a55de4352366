"""
Acceptance-scale Monte Carlo checks of the moment formulas.

These take minutes; deselect with -m "not slow".
"""

import numpy as np
import pytest

from kss.conditional import d_of_r_mc, second_moment_mc
from kss.models.spectrum import MixedSpectrum, SystemSpec
from kss.moments import (
    blowup_diagnostics,
    concentration_bound,
    dbar_bound,
    ej_squared,
    expected_zero_measure,
)
from kss.montecarlo import mean_estimate
from kss.sampler import random_unit_vectors, sample_system
from kss.series import NONNEGATIVE_SLACK, series_check
from kss.spectrum import xi_eval
from kss.zerocount import empirical_moments

pytestmark = pytest.mark.slow


class TestFirstMoment:
    """Empirical zero counts against the closed-form first moment."""

    def test_circle_cubic(self):
        """N = K = 1, xi = t^3: mean over 10^4 systems within 3 SE of 2 sqrt(3)."""
        spec = SystemSpec(N=1, K=1, spectra=(MixedSpectrum.monomial(3),))
        moments = empirical_moments(spec, n_trials=10_000, seed=1)

        assert moments.as_estimate().within(2.0 * np.sqrt(3.0), n_se=3.0)

    def test_mixed_degrees(self):
        """N = K = 2, degrees (2, 3): mean over 2000 systems within 3 SE of 2 sqrt(6)."""
        spec = SystemSpec.homogeneous(2, [2, 3])
        moments = empirical_moments(spec, n_trials=2000, seed=2)

        assert moments.as_estimate().within(2.0 * np.sqrt(6.0), n_se=3.0)
        assert moments.saturation_rate < 0.01

    def test_crofton_curve_length(self):
        """K = 1, N = 2, xi = t^2: slicing mean over 500 systems within 3 SE of 2 pi sqrt(2)."""
        spec = SystemSpec(N=2, K=1, spectra=(MixedSpectrum.monomial(2),))
        moments = empirical_moments(spec, n_trials=500, seed=3)

        assert moments.as_estimate().within(2.0 * np.pi * np.sqrt(2.0), n_se=3.0)


class TestCovarianceLaw:
    """Sampled systems reproduce the covariance polynomial."""

    def test_twenty_pairs(self):
        """E f(x) f(y) = xi(x . y) within 5 SE on 20 pairs, 10^5 draws each."""
        spectrum = MixedSpectrum(terms=((2, 1.0), (3, 0.5), (5, 0.25)))
        spec = SystemSpec(N=3, K=1, spectra=(spectrum,))
        rng = np.random.default_rng(4)
        X = random_unit_vectors(4, 20, rng)
        Y = random_unit_vectors(4, 20, rng)

        n = 100_000
        draw_rng = np.random.default_rng(5)
        products = np.empty((n, 20))
        for s in range(n):
            system = sample_system(spec, draw_rng)
            products[s] = system.evaluate(X)[:, 0] * system.evaluate(Y)[:, 0]

        target = xi_eval(spectrum, np.einsum("ij,ij->i", X, Y))
        for j in range(20):
            assert mean_estimate(products[:, j]).within(target[j], n_se=5.0)


class TestSecondMoment:
    """Kac-Rice second moment against direct counting."""

    def test_closure_on_circle(self):
        """N = K = 1, xi = t^3: Kac-Rice E Z^2 within 5% of the empirical mean of Z^2."""
        spec = SystemSpec(N=1, K=1, spectra=(MixedSpectrum.monomial(3),))
        report = second_moment_mc(spec, n_nodes=64, n_samples_per_node=10_000, seed=6)
        moments = empirical_moments(spec, n_trials=10_000, seed=7)
        direct = float(np.mean(moments.values**2))

        assert report.second_moment.estimate == pytest.approx(direct, rel=0.05)

    @pytest.mark.parametrize("N", [4, 8])
    @pytest.mark.parametrize("r", [0.0, 0.1, 0.2])
    def test_conditional_jacobian_bound(self, N, r):
        """D(r) / (E J)^2 <= 1 + 1/(N-1) + r^2 sqrt(N pi / 2) + 3 SE for xi = t^2."""
        spec = SystemSpec.homogeneous(N, [2] * N)
        estimate = d_of_r_mc(spec, r, n_samples=20_000, seed=8)
        scale = ej_squared(N, N)

        assert estimate.estimate / scale <= dbar_bound(N, r) + 3.0 * estimate.std_error / scale


class TestConcentrationTrend:
    """Normalized variance shrinks as the dimension grows."""

    def test_analytic_bound_decreases(self):
        """The near-orthogonal bound is strictly decreasing over N = 4, 8, 16."""
        values = [concentration_bound(SystemSpec.homogeneous(N, [2] * N)) for N in (4, 8, 16)]

        assert values[0] > values[1] > values[2]

    def test_empirical_variance_decreases(self):
        """Var(Z) / (E Z)^2 for xi = t^2 is smaller at N = 3 than at N = 1."""
        low = empirical_moments(SystemSpec.homogeneous(1, [2]), n_trials=2000, seed=9)
        high = empirical_moments(SystemSpec.homogeneous(3, [2, 2, 2]), n_trials=1000, seed=10)

        assert high.normalized_variance < low.normalized_variance
        assert low.expected == pytest.approx(expected_zero_measure(SystemSpec.homogeneous(1, [2])).first_moment)


class TestSeriesPositivity:
    """Power-series coefficients of Lambda(t) are nonnegative."""

    def test_hundred_trials(self):
        """min alpha_k >= -1e-8 over 100 random instances, residual <= 1e-8 when Sigma_1 = 0."""
        frame = series_check(100, seed=11)

        assert frame["min_coefficient"].min() >= -NONNEGATIVE_SLACK
        assert frame["derivative_residual"].dropna().max() <= 1e-8


class TestBlowup:
    """The high-degree perturbation example."""

    def test_inequality_on_window(self):
        """M_1(r) L(r) >= (4 N (1 - r^2))^{-1} on the window for p = 10^4, N = 8."""
        assert blowup_diagnostics(10_000, 8)["holds"].all()
