"""
Gauss-Legendre quadrature on overlap intervals.

The "theta" rule substitutes r = cos(theta) so that dr = sin(theta) d(theta)
absorbs the (1 - r^2)^(-1/2) growth of the second-moment integrands at
r = +-1. Nodes always lie strictly inside the interval.
"""

from dataclasses import dataclass, field
from enum import Enum
import logging
from typing import Callable

import numpy as np

from kss.exceptions import DomainError

logger = logging.getLogger(__name__)

DEFAULT_NODES = 64
DEFAULT_RTOL = 1e-4
MAX_NODES = 4096
# Largest |r| a theta node may take; stays clear of the singular-overlap guard 1 - 1e-12.
NODE_LIMIT = 1.0 - 1e-11


class QuadratureKind(Enum):
    """Node placement rules."""

    THETA = "theta"  # Gauss-Legendre in theta with r = cos(theta)
    LEGENDRE = "legendre"  # Gauss-Legendre directly in r


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights in r for a fixed interval."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: QuadratureKind
    interval: tuple[float, float]

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))


@dataclass
class QuadratureResult:
    """An integral together with the rule and integrand values it used."""

    value: float
    rule: QuadratureRule
    values: np.ndarray
    converged: bool = True
    history: list[float] = field(default_factory=list)


def make_rule(
    n_nodes: int = DEFAULT_NODES,
    interval: tuple[float, float] = (-1.0, 1.0),
    kind: QuadratureKind | str = QuadratureKind.THETA,
) -> QuadratureRule:
    """
    Build an n-node rule on [a, b] with -1 <= a < b <= 1.

    Nodes are returned in increasing r.
    """
    kind = QuadratureKind(kind)
    a, b = (float(v) for v in interval)
    if not -1.0 <= a < b <= 1.0:
        raise DomainError("interval", f"need -1 <= a < b <= 1, got [{a}, {b}]")
    if n_nodes < 1:
        raise DomainError("n_nodes", f"must be positive, got {n_nodes}")

    x, w = np.polynomial.legendre.leggauss(n_nodes)
    if kind is QuadratureKind.THETA:
        lo, hi = np.arccos(b), np.arccos(a)
        theta = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        # Fine rules put the end nodes within 1e-12 of +-1; clip them onto NODE_LIMIT.
        nodes = np.clip(np.cos(theta), -NODE_LIMIT, NODE_LIMIT)
        weights = 0.5 * (hi - lo) * w * np.sin(theta)
    else:
        nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
        weights = 0.5 * (b - a) * w

    order = np.argsort(nodes)
    return QuadratureRule(nodes=nodes[order], weights=weights[order], kind=kind, interval=(a, b))


def integrate(
    integrand: Callable[[float], float],
    interval: tuple[float, float] = (-1.0, 1.0),
    kind: QuadratureKind | str = QuadratureKind.THETA,
    n_nodes: int = DEFAULT_NODES,
    rtol: float = DEFAULT_RTOL,
    adaptive: bool = True,
) -> QuadratureResult:
    """
    Integrate a deterministic scalar integrand over an overlap interval.

    Args:
        integrand: Function of r
        interval: Integration limits inside [-1, 1]
        kind: Node placement rule
        n_nodes: Starting number of nodes
        rtol: Relative agreement required between successive doublings
        adaptive: Double the node count until successive estimates agree

    Returns:
        QuadratureResult of the finest rule evaluated
    """
    rule = make_rule(n_nodes, interval, kind)
    values = np.array([integrand(r) for r in rule.nodes], dtype=float)
    value = rule.integrate(values)
    history = [value]
    if not adaptive:
        return QuadratureResult(value=value, rule=rule, values=values, history=history)

    while rule.n_nodes * 2 <= MAX_NODES:
        rule = make_rule(rule.n_nodes * 2, interval, kind)
        values = np.array([integrand(r) for r in rule.nodes], dtype=float)
        previous, value = value, rule.integrate(values)
        history.append(value)
        if abs(value - previous) <= rtol * abs(value):
            return QuadratureResult(value=value, rule=rule, values=values, history=history)

    logger.warning(
        f"Quadrature did not reach rtol={rtol} with {rule.n_nodes} nodes "
        f"(last estimates {history[-2:]})"
    )
    return QuadratureResult(
        value=value, rule=rule, values=values, converged=False, history=history
    )
