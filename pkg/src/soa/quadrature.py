"""Gauss-Legendre rules under the uniform probability density on [-1, 1].

Weights are normalized to sum to one, so every rule computes expectations
directly.  An m-point rule integrates polynomials of degree <= 2m - 1
exactly.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InputError, ModelEvaluationError

MAX_TENSOR_NODES = 10 ** 8
DEFAULT_DEGREE_HINT = 10


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def points(self) -> int:
        return self.nodes.shape[0]

    @property
    def exact_degree(self) -> int:
        return 2 * self.points - 1

    def integrate(self, f) -> float:
        """Expectation of ``f`` (vectorized over nodes) under the uniform density."""
        return math.fsum(self.weights * np.asarray(f(self.nodes), dtype=float))


@dataclass(frozen=True)
class TensorRule:
    """Product rule on [-1, 1]^d; ``nodes`` has shape (N, d)."""

    nodes: np.ndarray
    weights: np.ndarray
    rule1d: QuadratureRule
    d: int

    @property
    def points_per_dim(self) -> int:
        return self.rule1d.points

    def integrate(self, f) -> float:
        return math.fsum(self.weights * np.asarray(f(self.nodes), dtype=float))


def _legendre_and_derivative(m: int, x: np.ndarray):
    p_prev, p = np.ones_like(x), x.copy()
    for k in range(1, m):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = m * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@functools.lru_cache(maxsize=128)
def _gauss_legendre_cached(points: int):
    if points == 1:
        return np.array([0.0]), np.array([1.0])
    k = np.arange(1, points)
    offdiag = k / np.sqrt(4.0 * k * k - 1.0)
    nodes, vecs = eigh_tridiagonal(np.zeros(points), offdiag)
    weights = vecs[0] ** 2
    # one Newton step on P_m, then weights from the derivative formula
    p, dp = _legendre_and_derivative(points, nodes)
    nodes = nodes - p / dp
    _, dp = _legendre_and_derivative(points, nodes)
    weights = 1.0 / ((1.0 - nodes * nodes) * dp * dp)
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    weights = weights / math.fsum(weights)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre(points: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``points`` nodes (Golub-Welsch, Newton-polished)."""
    if not isinstance(points, (int, np.integer)) or points < 1:
        raise InputError(f"a quadrature rule needs at least one point, got {points!r}")
    nodes, weights = _gauss_legendre_cached(int(points))
    return QuadratureRule(nodes, weights)


def tensor_rule(rule1d: QuadratureRule, d: int) -> TensorRule:
    """Full tensor product of ``rule1d`` in ``d`` dimensions (last coordinate fastest)."""
    if d < 1:
        raise InputError("tensor rule needs d >= 1")
    count = rule1d.points ** d
    if count > MAX_TENSOR_NODES:
        raise InputError(
            f"tensor rule with {rule1d.points}^{d} = {count} nodes exceeds {MAX_TENSOR_NODES}"
        )
    grids = np.meshgrid(*([rule1d.nodes] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wgrids = np.meshgrid(*([rule1d.weights] * d), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return TensorRule(nodes=nodes, weights=weights, rule1d=rule1d, d=d)


def points_for(alpha_degree: int, model_degree_hint: int = DEFAULT_DEGREE_HINT) -> int:
    """Per-coordinate rule size for projecting a model onto a degree-``alpha_degree`` element."""
    return math.ceil((alpha_degree + model_degree_hint + 1) / 2) + 2


def evaluate_on(model, nodes: np.ndarray) -> np.ndarray:
    """Evaluate ``model`` at each row of ``nodes``.

    Models exposing ``evaluate_batch`` are called once on the whole array;
    plain callables are called point by point.  Failures are re-raised as
    :class:`ModelEvaluationError` carrying the offending point.
    """
    batch = getattr(model, "evaluate_batch", None)
    if batch is not None:
        try:
            out = np.asarray(batch(nodes), dtype=float)
        except ModelEvaluationError:
            raise
        except Exception:
            out = None
        if out is not None and out.shape == (nodes.shape[0],) and np.all(np.isfinite(out)):
            return out
    out = np.empty(nodes.shape[0])
    for k, x in enumerate(nodes):
        try:
            val = float(model(x))
        except ModelEvaluationError:
            raise
        except Exception as exc:
            raise ModelEvaluationError(x, exc) from exc
        if not math.isfinite(val):
            raise ModelEvaluationError(x, f"non-finite value {val}")
        out[k] = val
    return out


def galerkin_project(model, psi, rule: TensorRule, model_values: np.ndarray | None = None) -> float:
    """Quadrature estimate of E[model(X) psi(X)] under the uniform density.

    ``psi`` is a :class:`~soa.basis.Polynomial` or a vectorized callable.
    The sum is correctly rounded (``math.fsum``), hence independent of
    evaluation order.
    """
    if model_values is None:
        model_values = evaluate_on(model, rule.nodes)
    psi_values = np.asarray(psi(rule.nodes), dtype=float)
    return math.fsum(rule.weights * model_values * psi_values)
