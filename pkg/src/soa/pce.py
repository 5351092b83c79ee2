"""Truncated polynomial chaos expansions in normalized Legendre polynomials.

A :class:`Pce` lives on the uniform hypercube [-1, 1]^d.  Models with other
continuous input distributions are composed with the inverse Rosenblatt map
first, so the stored coefficients are those of ``model o T^-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from . import quadrature
from .basis import graded_multi_indices, legendre_table, multi_index_key, support
from .errors import InputError
from .transform import DistributionSpec, Rosenblatt, Uniform

BESSEL_TOL = 1e-8

# q-norm comparisons: 60 significant digits, with differences below 1e-45
# treated as ties (ties such as 1^(1/2) + 1^(1/2) = 4^(1/2) do occur)
_QNORM_DPS = 60
_QNORM_TIE = mpmath.mpf("1e-45")


# --------------------------------------------------------------------------
# q-norm rings


def _q_value(q):
    if isinstance(q, float):
        q = Fraction(q).limit_denominator(10 ** 6) if q != 1.0 else Fraction(1)
    q = Fraction(q)
    if not 0 < q <= 1:
        raise InputError(f"q must lie in (0, 1], got {q}")
    return q


def qnorm_ring(alpha, q) -> int:
    """Smallest integer ``p`` with ``(sum alpha_i^q)^(1/q) <= p``."""
    q = _q_value(q)
    nonzero = [a for a in alpha if a > 0]
    if not nonzero:
        return 0
    if q == 1:
        return sum(nonzero)
    if len(nonzero) == 1:
        return nonzero[0]
    with mpmath.workdps(_QNORM_DPS):
        qq = mpmath.mpf(q.numerator) / q.denominator
        s = mpmath.fsum(mpmath.power(a, qq) for a in nonzero)
        norm = mpmath.power(s, 1 / qq)
        p = int(mpmath.floor(norm))
        if norm - p < _QNORM_TIE:
            return p
        if p + 1 - norm < _QNORM_TIE:
            return p + 1
        return p + 1


def within_qnorm(alpha, q, p: int) -> bool:
    return qnorm_ring(alpha, q) <= p


def ring_candidates(d: int, q, p: int) -> list:
    """Multi-indices entering at ring ``p`` (q-norm <= p but not <= p - 1), in enumeration order."""
    # for q <= 1 the q-norm dominates the total degree, so total degree <= p suffices
    return [a for a in graded_multi_indices(d, p) if qnorm_ring(a, q) == p]


# --------------------------------------------------------------------------
# expansion object


@dataclass
class Pce:
    """Sparse PCE: coefficients keyed by multi-index, plus construction metadata.

    ``variance_estimate`` is the estimate of the model variance the
    expansion was built against; ``converged`` records whether the
    truncation error reached ``epsilon``.
    """

    d: int
    coeffs: dict
    distribution: DistributionSpec | None = None
    variance_estimate: float = 0.0
    converged: bool = True
    epsilon: float = 0.0
    construction_log: list = field(default_factory=list)
    variance_stderr: float = 0.0

    def __post_init__(self):
        zero = (0,) * self.d
        coeffs = {tuple(int(a) for a in k): float(v) for k, v in self.coeffs.items()}
        for alpha in coeffs:
            if len(alpha) != self.d or min(alpha) < 0:
                raise InputError(f"multi-index {alpha} does not fit d={self.d}")
        coeffs.setdefault(zero, 0.0)
        self.coeffs = dict(sorted(coeffs.items(), key=lambda kv: multi_index_key(kv[0])))
        if self.distribution is None:
            self.distribution = DistributionSpec.uniform(self.d)

    def __len__(self):
        return len(self.coeffs)

    @property
    def terms(self) -> dict:
        """Coefficients of the non-constant terms."""
        zero = (0,) * self.d
        return {a: y for a, y in self.coeffs.items() if a != zero}

    @property
    def supports(self) -> set:
        return {support(a) for a in self.terms}

    def __call__(self, u) -> np.ndarray:
        """Evaluate the surrogate at points of [-1, 1]^d (one point or a batch)."""
        u = np.asarray(u, dtype=float)
        batch = u.reshape(-1, self.d)
        deg = max((max(a) for a in self.coeffs), default=0)
        tables = [legendre_table(deg, batch[:, i]) for i in range(self.d)]
        out = np.zeros(batch.shape[0])
        for alpha, y in self.coeffs.items():
            term = np.full(batch.shape[0], y)
            for i, a in enumerate(alpha):
                if a:
                    term = term * tables[i][a]
            out += term
        return out if u.ndim == 2 else float(out[0])

    def to_json_obj(self) -> dict:
        return {
            "d": self.d,
            "distribution": self.distribution.to_json_obj(),
            "coefficients": [{"alpha": list(a), "y": y} for a, y in self.coeffs.items()],
            "sigma2_estimate": self.variance_estimate,
            "converged": self.converged,
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_json_obj(cls, obj) -> "Pce":
        try:
            d = int(obj["d"])
            coeffs = {tuple(c["alpha"]): float(c["y"]) for c in obj["coefficients"]}
            return cls(
                d=d,
                coeffs=coeffs,
                distribution=DistributionSpec.from_json_obj(obj["distribution"]),
                variance_estimate=float(obj["sigma2_estimate"]),
                converged=bool(obj.get("converged", True)),
                epsilon=float(obj.get("epsilon", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed PCE file: {exc}") from exc


def mean(pce: Pce) -> float:
    return pce.coeffs[(0,) * pce.d]


def variance(pce: Pce) -> float:
    """Sum of squared non-constant coefficients (Parseval)."""
    return math.fsum(y * y for y in pce.terms.values())


def truncation_error(pce: Pce, sigma2_total: float | None = None) -> float:
    """Variance left unexplained by the retained terms, clamped at 0."""
    sigma2 = pce.variance_estimate if sigma2_total is None else sigma2_total
    remainder = sigma2 - variance(pce)
    if remainder < -BESSEL_TOL * max(1.0, abs(sigma2)):
        raise InputError(
            f"retained variance {variance(pce)} exceeds the total variance {sigma2}; "
            "the variance estimate is inconsistent"
        )
    return max(0.0, remainder)


def chebyshev_tail(pce: Pce, sigma2_total: float | None, t: float) -> float:
    """Tail bound ``(sigma2 - sum y^2)^2 / t^2`` on P(|truncation error| >= t)."""
    if not t > 0:
        raise InputError("t must be positive")
    eps = truncation_error(pce, sigma2_total)
    return eps * eps / (t * t)


def partial_variance(pce: Pce, u) -> float:
    """Variance of the partial effect whose terms involve exactly the inputs in ``u``."""
    u = tuple(sorted(u))
    if not u:
        raise InputError("partial variance needs a nonempty subset")
    return math.fsum(y * y for a, y in pce.terms.items() if support(a) == u)


def partial_variances(pce: Pce) -> dict:
    """All nonzero partial-effect variances keyed by support."""
    out: dict = {}
    for a, y in pce.terms.items():
        out.setdefault(support(a), []).append(y * y)
    return {s: math.fsum(v) for s, v in sorted(out.items())}


def _require_independent(pce: Pce):
    if not pce.distribution.is_independent:
        raise InputError(
            "Sobol indices are only interpretable for independent inputs; "
            "use Shapley-Owen effects for dependent inputs"
        )


def sobol(pce: Pce, u) -> float:
    """Closed Sobol index: total partial variance of all nonempty subsets of ``u``."""
    _require_independent(pce)
    us = set(u)
    return math.fsum(v for s, v in partial_variances(pce).items() if set(s) <= us)


def total_sobol(pce: Pce, u) -> float:
    """Total Sobol index: partial variance of every subset meeting ``u``."""
    _require_independent(pce)
    us = set(u)
    return math.fsum(v for s, v in partial_variances(pce).items() if us & set(s))


# --------------------------------------------------------------------------
# sparse construction


@dataclass(frozen=True)
class SparseConfig:
    """Parameters of the ring-by-ring sparse construction.

    ``kappa_coeff`` defaults to ``1e-8 * sqrt(variance estimate)``.  When
    ``trust_degree_hint`` holds, the model is taken to be a polynomial of
    degree at most ``model_degree_hint``; the quadrature is then exact and
    coefficients below the rounding-level bound are withheld entirely.
    """

    q: float = 1.0
    epsilon: float = 1e-10
    kappa_coeff: float | None = None
    p_max: int = 10
    use_chebyshev: bool = False
    chebyshev_t: float = 1.0
    model_degree_hint: int = quadrature.DEFAULT_DEGREE_HINT
    trust_degree_hint: bool = True
    mc_samples: int = 100_000

    def __post_init__(self):
        _q_value(self.q)
        if not self.epsilon > 0:
            raise InputError("epsilon must be positive")
        if self.kappa_coeff is not None and not self.kappa_coeff > 0:
            raise InputError("kappa_coeff must be positive")
        if self.p_max < 0 or self.model_degree_hint < 0:
            raise InputError("p_max and model_degree_hint must be nonnegative")
        if not self.chebyshev_t > 0:
            raise InputError("chebyshev_t must be positive")


def composed_model(model, dist: DistributionSpec):
    """``model o T^-1`` as a batch evaluator on [-1, 1]^d, plus the Rosenblatt map used."""
    if not dist.is_continuous:
        raise InputError("PCE construction needs continuous inputs; use exact enumeration")
    identity = not dist.is_mvnormal and all(
        isinstance(m, Uniform) and m.a == -1.0 and m.b == 1.0 for m in dist.marginals
    )
    rosenblatt = Rosenblatt(dist)
    if identity:
        return model, rosenblatt

    class _Composite:
        def evaluate_batch(self, u):
            return quadrature.evaluate_on(model, rosenblatt.inverse_batch(u))

        def __call__(self, u):
            return float(self.evaluate_batch(np.asarray(u, dtype=float).reshape(1, -1))[0])

    return _Composite(), rosenblatt


def _welford(model, d: int, n: int, seed: int):
    rng = np.random.default_rng(seed)
    count, avg, m2 = 0, 0.0, 0.0
    chunk = 4096
    while count < n:
        size = min(chunk, n - count)
        vals = quadrature.evaluate_on(model, rng.uniform(-1.0, 1.0, (size, d)))
        for v in vals:
            count += 1
            delta = v - avg
            avg += delta / count
            m2 += delta * (v - avg)
    var = m2 / (count - 1)
    # standard error of the sample variance, normal-theory approximation
    return var, var * math.sqrt(2.0 / (count - 1))


class _TensorProjector:
    """Projects the model on one full tensor grid, reusing the model evaluations."""

    def __init__(self, model, d: int, points: int, max_degree: int):
        self.d = d
        self.rule = quadrature.tensor_rule(quadrature.gauss_legendre(points), d)
        self.values = quadrature.evaluate_on(model, self.rule.nodes)
        shape = (points,) * d
        self.weighted = (self.rule.weights * self.values).reshape(shape)
        self.table = legendre_table(max_degree, self.rule.rule1d.nodes)

    def psi(self, alpha) -> np.ndarray:
        out = np.ones((self.rule.points_per_dim,) * self.d)
        for i, a in enumerate(alpha):
            if a:
                shape = [1] * self.d
                shape[i] = -1
                out = out * self.table[a].reshape(shape)
        return out

    def project(self, alpha) -> tuple:
        products = (self.weighted * self.psi(alpha)).ravel()
        return math.fsum(products), math.fsum(np.abs(products))

    def second_moment(self) -> float:
        return math.fsum(self.rule.weights * self.values * self.values)


def build_sparse(model, dist: DistributionSpec | None = None, cfg: SparseConfig | None = None,
                 *, d: int | None = None, seed: int = 0) -> Pce:
    """Build a sparse PCE of ``model`` ring by ring until the truncation error drops below ``cfg.epsilon``.

    Ring ``p`` holds the multi-indices whose q-norm is at most ``p`` but not
    at most ``p - 1``.  In each ring, coefficients of magnitude at least
    ``kappa_coeff`` are admitted at once and the others wait; additionally
    the largest waiting coefficient is admitted every ring.  Coefficients
    below the quadrature error bound are withheld altogether.

    The model variance is estimated by tensor Gauss-Legendre quadrature of
    the model and its square (Monte Carlo with ``cfg.mc_samples`` samples and
    seed ``seed`` when that grid would be too large).

    Returns a :class:`Pce` whose ``converged`` flag reports whether the
    target was reached before ring ``cfg.p_max``.
    """
    cfg = cfg or SparseConfig()
    if dist is None:
        if d is None:
            raise InputError("give a distribution or the dimension d")
        dist = DistributionSpec.uniform(d)
    d = dist.d
    target, _ = composed_model(model, dist)

    hint = cfg.model_degree_hint
    m_proj = max(quadrature.points_for(cfg.p_max, hint), cfg.p_max + 1)
    m_sigma = hint + 3
    m = max(m_proj, m_sigma)
    stderr = 0.0
    if m ** d <= quadrature.MAX_TENSOR_NODES:
        projector = _TensorProjector(target, d, m, cfg.p_max)
        mu = projector.project((0,) * d)[0]
        sigma2 = max(0.0, projector.second_moment() - mu * mu)
    else:
        projector = _TensorProjector(target, d, m_proj, cfg.p_max)
        mu = projector.project((0,) * d)[0]
        sigma2, stderr = _welford(target, d, cfg.mc_samples, seed)

    kappa_coeff = cfg.kappa_coeff if cfg.kappa_coeff is not None else 1e-8 * math.sqrt(sigma2)
    eps64 = 64 * np.finfo(float).eps

    coeffs = {(0,) * d: mu}
    retained = []  # squared coefficients, in admission order
    waiting: dict = {}
    log = []

    def remainder():
        return sigma2 - math.fsum(retained)

    def stop() -> bool:
        rem = max(0.0, remainder())
        if cfg.use_chebyshev:
            return rem * rem / (cfg.chebyshev_t ** 2) < cfg.epsilon
        return rem < cfg.epsilon

    converged = stop()
    log.append({"ring": 0, "admitted": [], "remainder": remainder()})
    p = 0
    while not converged and p < cfg.p_max:
        p += 1
        admitted, withheld = [], 0
        for alpha in ring_candidates(d, cfg.q, p):
            y, scale = projector.project(alpha)
            kappa_err = eps64 * scale if cfg.trust_degree_hint else 0.0
            if abs(y) <= kappa_err:
                withheld += 1
                continue
            if abs(y) >= kappa_coeff:
                coeffs[alpha] = y
                retained.append(y * y)
                admitted.append(alpha)
            else:
                waiting[alpha] = y
        promoted = None
        if waiting:
            promoted = min(waiting, key=lambda a: (-abs(waiting[a]), multi_index_key(a)))
            y = waiting.pop(promoted)
            coeffs[promoted] = y
            retained.append(y * y)
        if math.fsum(retained) > sigma2 + BESSEL_TOL * max(1.0, sigma2):
            raise InputError(
                "retained variance exceeds the variance estimate; "
                "raise model_degree_hint so the quadrature resolves the model"
            )
        converged = stop()
        log.append(
            {
                "ring": p,
                "admitted": [list(a) for a in admitted],
                "promoted": list(promoted) if promoted else None,
                "waiting": len(waiting),
                "withheld": withheld,
                "remainder": remainder(),
            }
        )

    return Pce(
        d=d,
        coeffs=coeffs,
        distribution=dist,
        variance_estimate=sigma2,
        converged=converged,
        epsilon=cfg.epsilon,
        construction_log=log,
        variance_stderr=stderr,
    )


# --------------------------------------------------------------------------
# leave-one-out validation


@dataclass(frozen=True)
class LooResult:
    l1o: float
    sigma2: float

    @property
    def accuracy(self) -> float | None:
        """``1 - l1o / sigma2``; ``None`` for a constant response."""
        if self.sigma2 == 0:
            return None
        return 1.0 - self.l1o / self.sigma2


def _design(u: np.ndarray, basis: Sequence) -> np.ndarray:
    deg = max((max(a) for a in basis), default=0)
    tables = [legendre_table(deg, u[:, i]) for i in range(u.shape[1])]
    cols = []
    for alpha in basis:
        col = np.ones(u.shape[0])
        for i, a in enumerate(alpha):
            if a:
                col = col * tables[i][a]
        cols.append(col)
    return np.stack(cols, axis=1)


def loo_validate(model, dist: DistributionSpec, samples, fit: Sequence | Callable | None = None) -> LooResult:
    """Leave-one-out mean squared prediction error of a regression PCE.

    ``fit`` is either a list of multi-indices (least squares on those basis
    elements, the default being total degree <= 2) or a callable
    ``fit(u_train, y_train) -> predictor`` refitted once per left-out sample.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2 or x.shape[1] != dist.d:
        raise InputError(f"samples must have shape (n, {dist.d})")
    n = x.shape[0]
    if n < 10:
        raise InputError("leave-one-out validation needs at least 10 samples")
    y = quadrature.evaluate_on(model, x)
    u = Rosenblatt(dist).forward_batch(x)
    sigma2 = float(np.var(y))

    if callable(fit):
        resid = np.empty(n)
        for k in range(n):
            keep = np.arange(n) != k
            predictor = fit(u[keep], y[keep])
            resid[k] = y[k] - float(np.asarray(predictor(u[k:k + 1])).ravel()[0])
        return LooResult(float(np.mean(resid ** 2)), sigma2)

    basis = list(fit) if fit is not None else list(graded_multi_indices(dist.d, 2))
    if n <= len(basis):
        raise InputError(f"{n} samples cannot support leave-one-out with {len(basis)} basis terms")
    a = _design(u, basis)
    q_mat, r_mat = np.linalg.qr(a)
    if np.min(np.abs(np.diag(r_mat))) < 1e-12 * np.max(np.abs(np.diag(r_mat))):
        raise InputError("degenerate regression: design matrix is rank deficient")
    coef = np.linalg.solve(r_mat, q_mat.T @ y)
    hat = np.sum(q_mat * q_mat, axis=1)
    if np.any(hat > 1 - 1e-12):
        raise InputError("degenerate regression: a sample has leverage 1")
    resid = (y - a @ coef) / (1.0 - hat)
    return LooResult(float(np.mean(resid ** 2)), sigma2)
