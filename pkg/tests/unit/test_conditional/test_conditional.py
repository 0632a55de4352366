"""Unit tests for conditional gradient structure and the Jacobian functional."""

import numpy as np
import pytest

from kss.conditional import (
    conditional_gradient_covariance,
    conditional_pair_model,
    d_of_r_mc,
    eta_mc,
    jdet,
    joint_covariance,
    sample_conditional_pair,
    schur_conditional,
    second_moment_mc,
)
from kss.exceptions import (
    DomainError,
    EndpointSingularityError,
    ModelError,
    SingularOverlapError,
)
from kss.models.conditional import ConditionalPairModel
from kss.models.spectrum import MixedSpectrum, SystemSpec
from kss.moments import ej_squared, lambda_k, variance_upper_bound
from kss.spectrum import xi_eval
from tests.conftest import random_spectrum

OVERLAPS = [-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9]


class TestConditionalCovariance:
    """Schur conditioning against the closed-form table."""

    def test_schur_matches_table(self, rng):
        """Conditioning the joint covariance on both values reproduces the table."""
        for _ in range(50):
            spec_k = random_spectrum(rng)
            N = int(rng.integers(1, 5))
            for r in OVERLAPS:
                joint = joint_covariance(spec_k, r, N)
                conditioned = schur_conditional(joint.matrix, joint.value_index)
                table = conditional_gradient_covariance(spec_k, r, N)
                scale = xi_eval(spec_k, 1.0, order=1)

                np.testing.assert_allclose(
                    conditioned / scale, table.to_matrix() / scale, rtol=0, atol=1e-10
                )

    def test_joint_covariance_is_psd(self, mixed):
        """The unconditioned covariance has no negative eigenvalues."""
        for r in OVERLAPS:
            assert joint_covariance(mixed, r, 3).min_eigenvalue() > -1e-10

    def test_value_block(self, cubic):
        """Values have covariance [[xi(1), xi(r)], [xi(r), xi(1)]]."""
        joint = joint_covariance(cubic, 0.5, 2)

        np.testing.assert_allclose(joint.value_block, [[1.0, 0.125], [0.125, 1.0]])

    def test_in_plane_gradient_cross_term(self, cubic):
        """xi = t^3, r = 0.5: r xi'(r) - xi''(r)(1 - r^2) = -1.875."""
        joint = joint_covariance(cubic, 0.5, 2)
        gx, gy = 2 + 1, 2 + 2 + 1

        assert joint.matrix[gx, gy] == pytest.approx(-1.875)

    def test_value_gradient_terms_vanish_at_zero(self, quadratic):
        """xi'(0) = 0 removes every value-gradient covariance at r = 0."""
        joint = joint_covariance(quadratic, 0.0, 3)

        np.testing.assert_array_equal(joint.cross_block, 0.0)

    def test_singular_overlap(self, cubic):
        """r = 1 is refused."""
        with pytest.raises(SingularOverlapError):
            joint_covariance(cubic, 1.0, 2)

    def test_independent_directions_keep_full_variance(self, mixed):
        """Only the in-plane direction is deflated."""
        table = conditional_gradient_covariance(mixed, 0.4, 3)
        d1 = xi_eval(mixed, 1.0, order=1)

        np.testing.assert_allclose(table.variance[:-1], d1)
        assert table.variance[-1] < d1


class TestPairModel:
    """Tests for the normalized conditional pair law."""

    def test_last_column_is_lambda(self, rng):
        """The in-plane variance equals lambda_k(r) and the rest is 1."""
        spectra = tuple(random_spectrum(rng) for _ in range(2))
        spec = SystemSpec(N=3, K=2, spectra=spectra)
        model = conditional_pair_model(spec, 0.6)

        for k, spec_k in enumerate(spectra):
            assert model.diagonal[k, -1] == pytest.approx(lambda_k(spec_k, 0.6))
            table = conditional_gradient_covariance(spec_k, 0.6, 3)
            d1 = xi_eval(spec_k, 1.0, order=1)
            assert model.diagonal[k, -1] == pytest.approx(table.variance[-1] / d1, abs=1e-12)
        np.testing.assert_allclose(model.diagonal[:, :-1], 1.0)

    def test_blocks_are_psd(self, rng):
        """Every 2x2 block is positive semi-definite."""
        for _ in range(50):
            spec = SystemSpec(N=3, K=3, spectra=tuple(random_spectrum(rng) for _ in range(3)))
            for r in OVERLAPS:
                assert conditional_pair_model(spec, r).min_eigenvalue > -1e-10

    def test_invalid_model_raises(self):
        """A block with |cross| > variance cannot be sampled."""
        model = ConditionalPairModel(
            N=2, K=1, r=0.5, diagonal=np.ones((1, 2)), cross=np.full((1, 2), 2.0)
        )

        with pytest.raises(ModelError):
            sample_conditional_pair(model, seed=0)

    def test_sampled_blocks_match(self):
        """Empirical block covariance matches the model."""
        spec = SystemSpec.homogeneous(2, [3, 3])
        model = conditional_pair_model(spec, 0.5)
        m1, m2 = sample_conditional_pair(model, seed=1, size=40_000)

        empirical = np.cov(m1[:, 0, -1], m2[:, 0, -1])
        np.testing.assert_allclose(empirical, model.block(0, -1), atol=0.03)

    def test_hatted_tops_up_last_column(self, cubic):
        """hatted() keeps the cross terms and sets every variance to 1."""
        model = conditional_pair_model(SystemSpec(N=2, K=1, spectra=(cubic,)), 0.7)
        hat = model.hatted()

        np.testing.assert_array_equal(hat.diagonal, 1.0)
        np.testing.assert_array_equal(hat.cross, model.cross)


class TestJdet:
    """Tests for J(A) = sqrt(det(A A^T))."""

    def test_matches_determinant(self, rng):
        """Gram-Schmidt product equals sqrt(det(A A^T))."""
        for K, N in [(1, 1), (1, 4), (2, 3), (3, 3), (4, 7)]:
            A = rng.standard_normal((K, N))

            assert jdet(A) == pytest.approx(np.sqrt(np.linalg.det(A @ A.T)), rel=1e-10)

    def test_batch(self, rng):
        """Batched input gives one value per matrix."""
        A = rng.standard_normal((5, 2, 3))
        expected = [np.sqrt(np.linalg.det(a @ a.T)) for a in A]

        np.testing.assert_allclose(jdet(A), expected, rtol=1e-10)

    def test_padded_identity(self):
        """[I_K | 0] has J = 1."""
        assert jdet(np.hstack([np.eye(3), np.zeros((3, 2))])) == pytest.approx(1.0)

    def test_row_vector(self):
        """A single row gives its norm."""
        assert jdet(np.array([[3.0, 4.0, 0.0]])) == pytest.approx(5.0)

    def test_left_orthogonal_invariance(self, rng):
        """J(QA) = J(A) for orthogonal Q."""
        A = rng.standard_normal((3, 5))
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))

        assert jdet(Q @ A) == pytest.approx(jdet(A), rel=1e-10)

    def test_rank_deficient(self):
        """Linearly dependent rows give 0."""
        A = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0]])

        assert jdet(A) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_wide_transpose(self, rng):
        """K > N is a domain error."""
        with pytest.raises(DomainError):
            jdet(rng.standard_normal((3, 2)))


class TestDirectEstimators:
    """Tests for d_of_r_mc and eta_mc."""

    def test_independent_at_zero_overlap(self, cubic):
        """For xi = t^3 the pair decouples at r = 0, so D(0) = (E J)^2."""
        spec = SystemSpec(N=3, K=2, spectra=(cubic, cubic))
        estimate = d_of_r_mc(spec, 0.0, n_samples=40_000, seed=3)

        assert estimate.within(ej_squared(3, 2), n_se=5.0)

    def test_unpacks_as_pair(self, square_mixed_degrees):
        """The estimate unpacks as (estimate, std_error)."""
        value, se = d_of_r_mc(square_mixed_degrees, 0.3, n_samples=500, seed=0)

        assert value > 0.0
        assert se > 0.0

    def test_deterministic(self, square_mixed_degrees):
        """Same seed, same estimate."""
        a = d_of_r_mc(square_mixed_degrees, 0.3, n_samples=500, seed=4)
        b = d_of_r_mc(square_mixed_degrees, 0.3, n_samples=500, seed=4)

        assert a == b

    def test_eta_equals_d_when_lambda_is_one(self, cubic):
        """At r = 0, lambda = 1 so the hatted model is the same law."""
        spec = SystemSpec(N=2, K=2, spectra=(cubic, cubic))

        assert eta_mc(spec, 0.0, 500, seed=2) == d_of_r_mc(spec, 0.0, 500, seed=2)

    @pytest.mark.parametrize("r", [0.9995, -0.9995, 1.0])
    def test_overlap_guard(self, square_mixed_degrees, r):
        """|r| above the guard raises."""
        with pytest.raises(SingularOverlapError):
            d_of_r_mc(square_mixed_degrees, r, n_samples=500)

    def test_guard_is_configurable(self, square_mixed_degrees):
        """A looser guard admits closer overlaps."""
        estimate = d_of_r_mc(square_mixed_degrees, 0.9995, n_samples=500, max_overlap=0.9999)

        assert estimate.estimate >= 0.0

    def test_minimum_samples(self, square_mixed_degrees):
        """Fewer than 100 samples is refused."""
        with pytest.raises(DomainError):
            d_of_r_mc(square_mixed_degrees, 0.3, n_samples=10)


class TestSecondMomentMc:
    """Tests for the Kac-Rice second moment estimate."""

    @pytest.fixture
    def spec(self):
        return SystemSpec.homogeneous(2, [2, 2])

    def test_thread_count_does_not_change_result(self, spec):
        """Per-node sub-seeds make the result independent of threads."""
        one = second_moment_mc(spec, n_nodes=8, n_samples_per_node=200, seed=5, threads=1)
        four = second_moment_mc(spec, n_nodes=8, n_samples_per_node=200, seed=5, threads=4)

        assert one.interior == four.interior
        assert [n.D_hat for n in one.nodes] == [n.D_hat for n in four.nodes]

    def test_report_shape(self, spec):
        """One diagnostic row per node with a running cumulative sum."""
        report = second_moment_mc(spec, n_nodes=8, n_samples_per_node=200, seed=0)

        assert len(report.nodes) == 8
        assert report.nodes[-1].cumulative == pytest.approx(report.interior.estimate)
        assert report.first_moment == pytest.approx(2.0 * 2.0)
        assert report.atoms == pytest.approx(2.0 * report.first_moment)

    def test_fine_node_grid(self, circle_cubic):
        """2048 theta nodes integrate without hitting the singular-overlap guard."""
        report = second_moment_mc(circle_cubic, n_nodes=2048, n_samples_per_node=100, seed=1)

        assert len(report.nodes) == 2048
        assert np.isfinite(report.interior.estimate)

    def test_square_system_needs_theta(self, spec):
        """Legendre nodes are refused for K = N."""
        with pytest.raises(EndpointSingularityError):
            second_moment_mc(spec, n_nodes=8, n_samples_per_node=200, kind="legendre")

    def test_bound_dominates_near_orthogonal_window(self):
        """N = 2, K = 1, xi = t^2 on [-0.1, 0.1]: the deterministic bound is finite and above the estimate."""
        spec = SystemSpec(N=2, K=1, spectra=(MixedSpectrum.monomial(2),))
        bound = variance_upper_bound(spec, (-0.1, 0.1))
        report = second_moment_mc(spec, n_nodes=16, n_samples_per_node=2000, seed=3, interval=(-0.1, 0.1))

        assert np.isfinite(bound)
        assert report.atoms == 0.0
        assert report.interior.estimate > 0.0
        assert bound >= report.interior.estimate - 3.0 * report.interior.std_error

    def test_interior_window_drops_atoms(self, spec):
        """A window away from +-1 carries no atoms and accepts Legendre nodes for K = N."""
        report = second_moment_mc(
            spec, n_nodes=8, n_samples_per_node=200, seed=0, kind="legendre", interval=(-0.5, 0.5)
        )

        assert report.atoms == 0.0
        assert all(-0.5 <= n.r <= 0.5 for n in report.nodes)
