"""Unit tests for overlap quadrature rules."""

import numpy as np
import pytest

from kss.exceptions import DomainError
from kss.quadrature import MAX_NODES, NODE_LIMIT, QuadratureKind, integrate, make_rule
from kss.spectrum import SINGULAR_OVERLAP


class TestMakeRule:
    """Tests for make_rule."""

    @pytest.mark.parametrize("kind", ["theta", "legendre"])
    def test_nodes_strictly_inside_and_sorted(self, kind):
        """Nodes never touch the endpoints and come back in increasing r."""
        rule = make_rule(64, (-1.0, 1.0), kind)

        assert rule.nodes.min() > -1.0
        assert rule.nodes.max() < 1.0
        assert np.all(np.diff(rule.nodes) > 0)

    @pytest.mark.parametrize("kind", ["theta", "legendre"])
    @pytest.mark.parametrize("interval", [(-1.0, 1.0), (0.2, 0.7), (-1.0, -0.3)])
    def test_weights_sum_to_length(self, kind, interval):
        """Both rules integrate the constant 1 exactly."""
        rule = make_rule(64, interval, kind)

        assert rule.weights.sum() == pytest.approx(interval[1] - interval[0], rel=1e-12)

    def test_kind_from_string(self):
        """String kinds are accepted."""
        assert make_rule(8, kind="legendre").kind is QuadratureKind.LEGENDRE

    def test_invalid_interval(self):
        """Reversed or out-of-range intervals are refused."""
        with pytest.raises(DomainError):
            make_rule(8, (0.5, 0.2))
        with pytest.raises(DomainError):
            make_rule(8, (-1.5, 0.0))

    def test_invalid_node_count(self):
        """At least one node."""
        with pytest.raises(DomainError):
            make_rule(0)

    @pytest.mark.parametrize("n_nodes", [1024, 2048, MAX_NODES])
    def test_fine_theta_nodes_clear_singular_guard(self, n_nodes):
        """End nodes of fine theta rules stay at or inside NODE_LIMIT."""
        rule = make_rule(n_nodes, (-1.0, 1.0), "theta")

        assert np.abs(rule.nodes).max() <= NODE_LIMIT
        assert NODE_LIMIT < SINGULAR_OVERLAP
        assert rule.weights.sum() == pytest.approx(2.0, rel=1e-10)


class TestIntegrate:
    """Tests for integrate."""

    def test_polynomial_exact_with_legendre(self):
        """int_{-1}^{1} r^4 dr = 2/5."""
        result = integrate(lambda r: r**4, kind="legendre")

        assert result.value == pytest.approx(0.4, rel=1e-12)
        assert result.converged

    def test_theta_absorbs_endpoint_singularity(self):
        """int (1 - r^2)^{-1/2} dr = pi with the theta rule."""
        result = integrate(lambda r: 1.0 / np.sqrt(1.0 - r * r), kind="theta")

        assert result.value == pytest.approx(np.pi, rel=1e-10)

    def test_not_adaptive(self):
        """adaptive=False evaluates a single rule."""
        result = integrate(lambda r: r * r, n_nodes=16, adaptive=False)

        assert result.rule.n_nodes == 16
        assert len(result.history) == 1

    def test_history_records_doublings(self):
        """Each doubling appends an estimate."""
        result = integrate(np.cos, n_nodes=8)

        assert len(result.history) >= 2
        assert result.rule.n_nodes == 8 * 2 ** (len(result.history) - 1)

    def test_non_convergence_is_flagged(self):
        """An unreachable tolerance stops at the node cap with converged=False."""
        result = integrate(lambda r: np.sqrt(abs(r)), kind="legendre", rtol=0.0)

        assert not result.converged
        assert result.rule.n_nodes == MAX_NODES
