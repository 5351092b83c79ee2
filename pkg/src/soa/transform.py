"""Input distributions and the Rosenblatt map to independent uniforms on [-1, 1]^d.

The forward map sends ``x`` to ``u`` with ``u_k = 2 F_k(x_k | earlier inputs) - 1``
where "earlier" follows the chosen ordering.  Outputs are indexed by the
original input index, so ``u[i]`` always belongs to input ``i`` whatever
the ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from ._rational import format_number, parse_number
from .errors import InputError

_SQRT2 = math.sqrt(2.0)


# --------------------------------------------------------------------------
# marginals


@dataclass(frozen=True)
class Uniform:
    a: float = -1.0
    b: float = 1.0
    continuous = True

    def __post_init__(self):
        if not self.b > self.a:
            raise InputError(f"uniform needs a < b, got ({self.a}, {self.b})")

    @property
    def variance(self):
        return (self.b - self.a) ** 2 / 12.0

    def to_json_obj(self):
        return {"type": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Normal:
    mu: float = 0.0
    sigma: float = 1.0
    continuous = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError(f"normal needs sigma > 0, got {self.sigma}")

    @property
    def variance(self):
        return self.sigma ** 2

    def to_json_obj(self):
        return {"type": "normal", "mu": self.mu, "sigma": self.sigma}


@dataclass(frozen=True)
class Discrete:
    """Finite pmf over numeric outcomes; probabilities kept exact when given exactly."""

    values: tuple
    probs: tuple
    continuous = False

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise InputError("discrete marginal needs matching, nonempty values and probabilities")
        if any(p < 0 for p in self.probs):
            raise InputError("negative probability in discrete marginal")
        if abs(float(sum(self.probs)) - 1.0) > 1e-12:
            raise InputError(f"probabilities sum to {float(sum(self.probs))}, not 1")

    @property
    def variance(self):
        mean = sum(v * p for v, p in zip(self.values, self.probs))
        return sum(p * (v - mean) ** 2 for v, p in zip(self.values, self.probs))

    def outcomes(self):
        return list(zip(self.values, self.probs))

    def to_json_obj(self):
        return {
            "type": "discrete",
            "values": [format_number(v) for v in self.values],
            "probs": [format_number(p) for p in self.probs],
        }


def Bernoulli(p=Fraction(1, 2)) -> Discrete:
    """Bernoulli(p) as a two-point discrete marginal on {0, 1}."""
    p = Fraction(p) if not isinstance(p, float) else p
    if not 0 <= p <= 1:
        raise InputError(f"Bernoulli parameter must lie in [0, 1], got {p}")
    return Discrete(values=(Fraction(0), Fraction(1)), probs=(1 - p, p))


def _marginal_from_json(obj) -> object:
    kind = obj.get("type")
    try:
        if kind == "uniform":
            return Uniform(float(obj.get("a", -1.0)), float(obj.get("b", 1.0)))
        if kind == "normal":
            return Normal(float(obj.get("mu", 0.0)), float(obj.get("sigma", 1.0)))
        if kind == "bernoulli":
            return Bernoulli(parse_number(obj.get("p", "1/2")))
        if kind == "discrete":
            return Discrete(
                tuple(parse_number(v) for v in obj["values"]),
                tuple(parse_number(p) for p in obj["probs"]),
            )
    except (KeyError, TypeError) as exc:
        raise InputError(f"incomplete marginal specification {obj!r}") from exc
    raise InputError(f"unsupported marginal type {kind!r}")


# --------------------------------------------------------------------------
# distribution descriptor


@dataclass(frozen=True)
class DistributionSpec:
    """Either independent ``marginals`` or a multivariate normal (``mean``, ``cov``)."""

    marginals: tuple = ()
    mean: tuple = ()
    cov: tuple = ()
    ordering: tuple | None = None

    def __post_init__(self):
        if bool(self.marginals) == bool(self.mean):
            raise InputError("give either marginals or a multivariate normal, not both")
        if self.mean:
            d = len(self.mean)
            cov = np.asarray(self.cov, dtype=float)
            if cov.shape != (d, d):
                raise InputError("covariance shape does not match the mean")
            if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
                raise InputError("covariance matrix is not symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise InputError("covariance matrix is not positive definite") from None
        if self.ordering is not None:
            if sorted(self.ordering) != list(range(1, self.d + 1)):
                raise InputError(f"ordering {self.ordering} is not a permutation of 1..{self.d}")

    @classmethod
    def independent(cls, marginals: Sequence, ordering=None) -> "DistributionSpec":
        return cls(marginals=tuple(marginals), ordering=_tuple_or_none(ordering))

    @classmethod
    def mvnormal(cls, mean, cov, ordering=None) -> "DistributionSpec":
        mean = tuple(float(m) for m in mean)
        cov = tuple(tuple(float(c) for c in row) for row in cov)
        return cls(mean=mean, cov=cov, ordering=_tuple_or_none(ordering))

    @classmethod
    def uniform(cls, d: int) -> "DistributionSpec":
        return cls.independent([Uniform()] * d)

    @property
    def d(self) -> int:
        return len(self.marginals) if self.marginals else len(self.mean)

    @property
    def is_mvnormal(self) -> bool:
        return bool(self.mean)

    @property
    def is_continuous(self) -> bool:
        return self.is_mvnormal or all(m.continuous for m in self.marginals)

    @property
    def is_discrete(self) -> bool:
        return not self.is_mvnormal and not any(m.continuous for m in self.marginals)

    @property
    def is_independent(self) -> bool:
        if not self.is_mvnormal:
            return True
        cov = np.asarray(self.cov)
        return bool(np.all(cov[~np.eye(self.d, dtype=bool)] == 0))

    @property
    def order(self) -> tuple:
        return self.ordering or tuple(range(1, self.d + 1))

    def with_ordering(self, ordering) -> "DistributionSpec":
        return DistributionSpec(self.marginals, self.mean, self.cov, _tuple_or_none(ordering))

    def to_json_obj(self) -> dict:
        if self.is_mvnormal:
            obj = {"mvnormal": {"mean": list(self.mean), "cov": [list(r) for r in self.cov]}}
        else:
            obj = {"marginals": [m.to_json_obj() for m in self.marginals]}
        if self.ordering is not None:
            obj["ordering"] = list(self.ordering)
        return obj

    @classmethod
    def from_json_obj(cls, obj) -> "DistributionSpec":
        if not isinstance(obj, dict):
            raise InputError("distribution must be a JSON object")
        ordering = obj.get("ordering")
        if "marginals" in obj:
            return cls.independent([_marginal_from_json(m) for m in obj["marginals"]], ordering)
        if "mvnormal" in obj:
            mv = obj["mvnormal"]
            try:
                return cls.mvnormal(mv["mean"], mv["cov"], ordering)
            except (KeyError, TypeError) as exc:
                raise InputError("mvnormal needs 'mean' and 'cov'") from exc
        raise InputError("distribution needs 'marginals' or 'mvnormal'")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` points (shape (n, d))."""
        if self.is_mvnormal:
            chol = np.linalg.cholesky(np.asarray(self.cov))
            return np.asarray(self.mean) + rng.standard_normal((n, self.d)) @ chol.T
        cols = []
        for m in self.marginals:
            if isinstance(m, Uniform):
                cols.append(rng.uniform(m.a, m.b, n))
            elif isinstance(m, Normal):
                cols.append(rng.normal(m.mu, m.sigma, n))
            else:
                cols.append(rng.choice(np.array(m.values, dtype=float), size=n, p=np.array(m.probs, dtype=float)))
        return np.stack(cols, axis=1)


def _tuple_or_none(ordering):
    return None if ordering is None else tuple(int(i) for i in ordering)


# --------------------------------------------------------------------------
# Rosenblatt map


class Rosenblatt:
    """Sequential conditional-cdf transform of a continuous distribution.

    Parameters
    ----------
    spec : DistributionSpec
        Continuous distribution; discrete marginals are rejected.
    ordering : sequence of int, optional
        Conditioning order (1-based).  Defaults to ``spec.order``.
    """

    def __init__(self, spec: DistributionSpec, ordering=None):
        if not spec.is_continuous:
            raise InputError(
                "the Rosenblatt transform needs continuous inputs; "
                "use exact enumeration for discrete distributions"
            )
        self.spec = spec if ordering is None else spec.with_ordering(ordering)
        self.ordering = self.spec.order
        self.d = spec.d
        self._perm = np.array(self.ordering) - 1
        if spec.is_mvnormal:
            cov = np.asarray(spec.cov)
            self._mean = np.asarray(spec.mean)[self._perm]
            self._chol = np.linalg.cholesky(cov[np.ix_(self._perm, self._perm)])

    # standard-normal scores of the ordered inputs, shape (n, d)
    def _scores(self, x: np.ndarray) -> np.ndarray:
        xo = x[:, self._perm] - self._mean
        return solve_triangular(self._chol, xo.T, lower=True).T

    def forward_batch(self, x) -> np.ndarray:
        x = self._as_batch(x)
        if self.spec.is_mvnormal:
            z = self._scores(x)
            u = np.empty_like(x)
            u[:, self._perm] = special.erf(z / _SQRT2)
            return u
        u = np.empty_like(x)
        for i, m in enumerate(self.spec.marginals):
            col = x[:, i]
            if isinstance(m, Uniform):
                if np.any((col < m.a) | (col > m.b)):
                    raise InputError(f"input {i + 1} outside the support [{m.a}, {m.b}]")
                u[:, i] = 2.0 * (col - m.a) / (m.b - m.a) - 1.0
            else:
                u[:, i] = special.erf((col - m.mu) / (m.sigma * _SQRT2))
        return u

    def inverse_batch(self, u) -> np.ndarray:
        u = self._as_batch(u)
        if np.any(np.abs(u) >= 1.0):
            raise InputError("inverse Rosenblatt needs points strictly inside (-1, 1)^d")
        if self.spec.is_mvnormal:
            z = _SQRT2 * special.erfinv(u[:, self._perm])
            xo = z @ self._chol.T + self._mean
            x = np.empty_like(u)
            x[:, self._perm] = xo
            return x
        x = np.empty_like(u)
        for i, m in enumerate(self.spec.marginals):
            col = u[:, i]
            if isinstance(m, Uniform):
                x[:, i] = m.a + (m.b - m.a) * (col + 1.0) / 2.0
            else:
                x[:, i] = m.mu + m.sigma * _SQRT2 * special.erfinv(col)
        return x

    def forward(self, x) -> np.ndarray:
        return self.forward_batch(np.asarray(x, dtype=float).reshape(1, -1))[0]

    def inverse(self, u) -> np.ndarray:
        return self.inverse_batch(np.asarray(u, dtype=float).reshape(1, -1))[0]

    def _as_batch(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.d:
            raise InputError(f"expected points of dimension {self.d}")
        return x


def marginal_cdf(spec: DistributionSpec, k: int, x_prefix: Sequence, x_k: float) -> float:
    """Conditional cdf of the ``k``-th input in the ordering given the earlier ones.

    ``k`` is a 1-based position in ``spec.order``; ``x_prefix`` holds the
    values of the inputs at positions 1..k-1 in that order.
    """
    if not spec.is_continuous:
        raise InputError("conditional cdfs are only defined here for continuous inputs")
    order = spec.order
    if not 1 <= k <= spec.d or len(x_prefix) != k - 1:
        raise InputError(f"need position 1 <= k <= {spec.d} and a prefix of length k-1")
    idx = order[k - 1] - 1
    if not spec.is_mvnormal:
        m = spec.marginals[idx]
        if isinstance(m, Uniform):
            return float(min(1.0, max(0.0, (x_k - m.a) / (m.b - m.a))))
        return float(special.ndtr((x_k - m.mu) / m.sigma))
    cov = np.asarray(spec.cov)
    mean = np.asarray(spec.mean)
    given = [i - 1 for i in order[: k - 1]]
    if given:
        s_kg = cov[idx, given]
        s_gg = cov[np.ix_(given, given)]
        coef = np.linalg.solve(s_gg, s_kg)
        cmean = mean[idx] + coef @ (np.asarray(x_prefix, dtype=float) - mean[given])
        cvar = cov[idx, idx] - s_kg @ coef
    else:
        cmean, cvar = mean[idx], cov[idx, idx]
    return float(special.ndtr((x_k - cmean) / math.sqrt(cvar)))
