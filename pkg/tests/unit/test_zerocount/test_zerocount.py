"""Unit tests for the zero counters and empirical moments."""

import numpy as np
import pytest

from kss.exceptions import DomainError, GridSaturationError, NonConvergenceError
from kss.models.reports import CountStatus, ZeroCountResult
from kss.models.spectrum import SystemSpec
from kss.models.system import PolynomialSystem
from kss.sampler import sample_system
from kss.zerocount import (
    CircleCounter,
    CroftonEstimator,
    NewtonOptions,
    SphereCounter,
    count_zeros_circle,
    count_zeros_sphere,
    empirical_moments,
    estimate_hausdorff_crofton,
    measure_zeros,
    overlap_pair_count,
)

QUADRATIC_EXPONENTS = np.array([[2, 0], [1, 1], [0, 2]])


def line_pair(a: float, b: float, scale: float = 1.0) -> PolynomialSystem:
    """scale (x1 cos a - x0 sin a)(x1 cos b - x0 sin b), zero at angles a, b, a + pi, b + pi."""
    coefficients = [scale * c for c in (np.sin(a) * np.sin(b), -np.sin(a + b), np.cos(a) * np.cos(b))]
    return PolynomialSystem(N=1, exponents=[QUADRATIC_EXPONENTS], coefficients=[coefficients])


class TestCircleCounter:
    """Tests for the exact circle tier."""

    def test_product_of_coordinates(self):
        """x0 x1 vanishes at the four axis points."""
        system = PolynomialSystem(N=1, exponents=[np.array([[1, 1]])], coefficients=[[1.0]])
        result = count_zeros_circle(system)

        assert result.count == 4
        assert result.residual_max <= 1e-10
        assert result.status is CountStatus.OK

    def test_cubic_harmonic(self):
        """x0^3 - 3 x0 x1^2 = cos(3t) has six zeros."""
        system = PolynomialSystem(
            N=1, exponents=[np.array([[3, 0], [1, 2]])], coefficients=[[1.0, -3.0]]
        )

        assert count_zeros_circle(system).count == 6

    def test_difference_of_squares(self):
        """x0^2 - x1^2 vanishes at pi/4 + k pi/2."""
        system = PolynomialSystem(N=1, exponents=[QUADRATIC_EXPONENTS], coefficients=[[1.0, 0.0, -1.0]])
        result = count_zeros_circle(system)

        assert result.count == 4
        np.testing.assert_allclose(np.abs(result.roots), np.sqrt(0.5), atol=1e-10)

    def test_no_zeros(self):
        """x0^2 + x1^2 = 1 on the circle."""
        system = PolynomialSystem(N=1, exponents=[QUADRATIC_EXPONENTS], coefficients=[[1.0, 0.0, 1.0]])
        result = count_zeros_circle(system)

        assert result.count == 0
        assert result.roots.shape == (0, 2)

    def test_roots_lie_on_zero_set(self, circle_cubic):
        """Returned roots are unit vectors with small residual."""
        for seed in range(10):
            system = sample_system(circle_cubic, seed=seed)
            result = count_zeros_circle(system)

            assert result.count % 2 == 0
            assert result.roots.shape == (result.count, 2)
            if result.count:
                np.testing.assert_allclose(np.linalg.norm(result.roots, axis=1), 1.0)
                assert np.abs(system.evaluate(result.roots)).max() <= 1e-10

    def test_rejects_more_variables(self, square_mixed_degrees):
        """Only one equation in two variables."""
        with pytest.raises(DomainError):
            count_zeros_circle(sample_system(square_mixed_degrees, seed=0))

    def test_close_zeros_saturate_coarse_grid(self):
        """Sign changes in neighbouring cells cannot be separated."""
        step = 2.0 * np.pi / 64
        counter = CircleCounter(min_grid=64, points_per_degree=1, max_attempts=1)

        with pytest.raises(GridSaturationError):
            counter.count(line_pair(0.7 * step, 1.7 * step))

    def test_refinement_resolves_close_zeros(self):
        """Doubling the grid separates the zeros and records a warning."""
        step = 2.0 * np.pi / 64
        counter = CircleCounter(min_grid=64, points_per_degree=1, max_attempts=2)
        result = counter.count(line_pair(0.7 * step, 1.7 * step))

        assert result.count == 4
        assert counter.warnings == ["Refining angle grid to 128 points"]

    def test_large_residual_is_reported(self):
        """Coefficients of size 1e12 leave residuals above the default tolerance."""
        counter = CircleCounter()
        result = counter.count(line_pair(0.3, 1.9, scale=1e12))

        assert result.count == 4
        assert result.residual_max > counter.residual_tol
        assert any(w.startswith("Polished zero residual") for w in counter.warnings)


class TestSphereCounter:
    """Tests for the multi-start Newton tier."""

    def test_linear_system(self, rng):
        """Two generic linear forms on S^2 vanish at one antipodal pair."""
        system = PolynomialSystem.from_linear_forms(rng.standard_normal((2, 3)))
        result = count_zeros_sphere(system, seed=1)

        assert result.count == 2
        assert result.residual_max <= 1e-10
        np.testing.assert_allclose(result.roots[0], -result.roots[1], atol=1e-8)

    def test_known_system(self):
        """x0 x1 = 0, x2 = 0 on S^2 has four zeros."""
        system = PolynomialSystem(
            N=2,
            exponents=[np.array([[1, 1, 0]]), np.array([[0, 0, 1]])],
            coefficients=[[1.0], [1.0]],
        )
        result = count_zeros_sphere(system, seed=3)

        assert result.count == 4
        assert not result.degenerate
        assert result.n_starts == 150

    @pytest.fixture
    def no_real_zeros(self):
        """x0^2 + x1^2 + x2^2 = 0, x0 = 0 has no zeros on S^2."""
        return PolynomialSystem(
            N=2,
            exponents=[np.eye(3, dtype=int) * 2, np.array([[1, 0, 0]])],
            coefficients=[[1.0, 1.0, 1.0], [1.0]],
        )

    def test_no_converged_start_raises(self, no_real_zeros):
        """Every start failing is a nonconvergence, not a silent zero count."""
        with pytest.raises(NonConvergenceError) as excinfo:
            count_zeros_sphere(no_real_zeros, seed=0)

        assert excinfo.value.ratio == 1.0

    def test_allow_empty_counts_zero(self, no_real_zeros):
        """With allow_empty the same system reports 0 zeros and all starts failed."""
        result = SphereCounter().count(no_real_zeros, seed=0, allow_empty=True)

        assert result.count == 0
        assert result.n_failed == result.n_starts

    def test_explicit_start_count(self, square_mixed_degrees):
        """n_starts overrides the default."""
        counter = SphereCounter(NewtonOptions(n_starts=40))

        assert counter.default_starts(sample_system(square_mixed_degrees, seed=0)) == 40

    def test_default_starts(self, square_mixed_degrees):
        """50 * ceil(2 sqrt(2 * 3)) = 250."""
        counter = SphereCounter()

        assert counter.default_starts(sample_system(square_mixed_degrees, seed=0)) == 250

    def test_deterministic(self, square_mixed_degrees):
        """Same system and seed give the same count."""
        system = sample_system(square_mixed_degrees, seed=6)

        assert count_zeros_sphere(system, seed=2).count == count_zeros_sphere(system, seed=2).count

    def test_non_regular_zero_set_is_flagged(self):
        """x0 x1 = 0, x0 x2 = 0 contains a whole circle, which is flagged rather than counted silently."""
        system = PolynomialSystem(
            N=2,
            exponents=[np.array([[1, 1, 0]]), np.array([[1, 0, 1]])],
            coefficients=[[1.0], [1.0]],
        )
        counter = SphereCounter(NewtonOptions(n_starts=200))
        result = counter.count(system, seed=0)

        assert result.flagged
        assert counter.warnings

    def test_antipodal_closure(self):
        """Every root of a parity-pure system comes with its antipode."""
        system = sample_system(SystemSpec.homogeneous(2, [2, 2]), seed=4)
        result = count_zeros_sphere(system, seed=0)

        for root in result.roots:
            assert np.linalg.norm(result.roots + root, axis=1).min() <= 1e-6

    def test_rejects_non_square(self, quadratic):
        """K < N is refused."""
        system = sample_system(SystemSpec(N=2, K=1, spectra=(quadratic,)), seed=0)

        with pytest.raises(DomainError):
            count_zeros_sphere(system)


class TestCrofton:
    """Tests for the slicing estimator."""

    def test_great_circle_length(self, rng):
        """The zero set of one linear form on S^2 is a great circle of length 2 pi."""
        system = PolynomialSystem.from_linear_forms(rng.standard_normal((1, 3)))
        result = estimate_hausdorff_crofton(system, n_slices=5, seed=0)

        assert result.count is None
        assert result.measure == pytest.approx(2.0 * np.pi)
        assert result.value == pytest.approx(2.0 * np.pi)

    def test_slice_basis_is_orthonormal(self, rng):
        """The slice basis has K + 1 orthonormal columns."""
        basis = CroftonEstimator().slice_basis(5, 2, rng)

        assert basis.shape == (5, 3)
        np.testing.assert_allclose(basis.T @ basis, np.eye(3), atol=1e-12)

    def test_rejects_square(self, square_mixed_degrees):
        """K = N goes to the counting tiers instead."""
        with pytest.raises(DomainError):
            estimate_hausdorff_crofton(sample_system(square_mixed_degrees, seed=0))


class TestDispatch:
    """Tests for measure_zeros."""

    def test_circle_tier(self, circle_cubic):
        """N = 1 uses the exact circle count."""
        system = sample_system(circle_cubic, seed=1)

        assert measure_zeros(system).count == count_zeros_circle(system).count

    def test_slicing_tier(self, quadratic):
        """K < N returns a measure."""
        system = sample_system(SystemSpec(N=2, K=1, spectra=(quadratic,)), seed=1)
        result = measure_zeros(system, seed=0, n_slices=3)

        assert result.count is None
        assert result.measure >= 0.0

    def test_residual_tolerance_reaches_circle_tier(self, caplog):
        """The Newton residual tolerance also governs the circle tier."""
        system = line_pair(0.3, 1.9, scale=1e12)

        with caplog.at_level("WARNING", logger="CircleCounter"):
            measure_zeros(system, options=NewtonOptions(residual_tol=1e6))
        assert "Polished zero residual" not in caplog.text

        with caplog.at_level("WARNING", logger="CircleCounter"):
            measure_zeros(system)
        assert "Polished zero residual" in caplog.text

    def test_square_system_without_zeros(self):
        """Sampled-trial dispatch counts 0 where the direct counter would raise."""
        system = PolynomialSystem(
            N=2,
            exponents=[np.eye(3, dtype=int) * 2, np.array([[1, 0, 0]])],
            coefficients=[[1.0, 1.0, 1.0], [1.0]],
        )

        assert measure_zeros(system).count == 0
        with pytest.raises(NonConvergenceError):
            measure_zeros(system, allow_empty=False)


class TestResultStatus:
    """Tests for ZeroCountResult flags."""

    def test_degenerate_outranks_saturated(self):
        """Both flags report as degenerate."""
        result = ZeroCountResult(count=2, saturated=True, degenerate=True)

        assert result.status is CountStatus.DEGENERATE
        assert result.flagged

    def test_value_without_count_or_measure(self):
        """An empty result has value nan."""
        assert np.isnan(ZeroCountResult().value)


class TestOverlapPairs:
    """Tests for overlap_pair_count."""

    @pytest.fixture
    def roots(self):
        return np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_diagonal(self, roots):
        """Overlap 1 only on the diagonal."""
        assert overlap_pair_count(roots, (0.9, 1.0)) == 3

    def test_antipodal(self, roots):
        """The antipodal pair is counted in both orders."""
        assert overlap_pair_count(roots, (-1.0, -0.5)) == 2

    def test_orthogonal(self, roots):
        """Four ordered orthogonal pairs."""
        assert overlap_pair_count(roots, (-0.1, 0.1)) == 4

    def test_empty(self):
        """No roots, no pairs."""
        assert overlap_pair_count(np.zeros((0, 3)), (-1.0, 1.0)) == 0


class TestEmpiricalMoments:
    """Tests for empirical_moments."""

    def test_thread_independent(self, circle_cubic):
        """Per-trial sub-seeds make the values independent of threads."""
        one = empirical_moments(circle_cubic, n_trials=20, seed=9, threads=1)
        three = empirical_moments(circle_cubic, n_trials=20, seed=9, threads=3)

        np.testing.assert_array_equal(one.values, three.values)

    def test_expected_from_closed_form(self, circle_cubic):
        """expected is 2 sqrt(3) and counts are even and at most 6."""
        moments = empirical_moments(circle_cubic, n_trials=30, seed=0)

        assert moments.expected == pytest.approx(2.0 * np.sqrt(3.0))
        assert moments.n_trials == 30
        assert set(moments.values.tolist()) <= {0.0, 2.0, 4.0, 6.0}
        assert moments.normalized_variance >= 0.0
