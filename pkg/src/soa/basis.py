"""Orthonormal polynomial bases and multi-index bookkeeping.

Multi-indices are tuples of nonnegative ints.  Their fixed enumeration is
graded: by total degree first, and within one total degree in descending
lexicographic order, so for d = 2 the sequence starts

    (0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), ...

Legendre polynomials are built with exact rational coefficients; a
normalization keeps coefficients exact when the norm is a rational square
and falls back to floats otherwise.
"""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import InputError

GS_CONDITION_WARNING = 1e12


# --------------------------------------------------------------------------
# multi-indices


def total_degree(alpha) -> int:
    return sum(alpha)


def multi_index_key(alpha) -> tuple:
    """Sort key realising the graded, descending-lexicographic enumeration."""
    return (sum(alpha), tuple(-a for a in alpha))


def graded_multi_indices(d: int, max_degree: int):
    """Yield every multi-index of total degree <= ``max_degree`` in enumeration order."""
    for deg in range(max_degree + 1):
        yield from _compositions(deg, d)


def _compositions(total: int, parts: int):
    # descending lexicographic order of the tuples summing to `total`
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def support(alpha) -> tuple:
    """Coalition of the coordinates with a nonzero degree (1-based)."""
    return tuple(i + 1 for i, a in enumerate(alpha) if a > 0)


def chi(u, alpha) -> int:
    """1 iff the support of ``alpha`` is exactly ``u``."""
    return int(support(alpha) == tuple(sorted(u)))


def project_support(terms: Mapping, u) -> dict:
    """Keep the terms of a basis expansion whose support is exactly ``u``."""
    u = tuple(sorted(u))
    return {alpha: c for alpha, c in terms.items() if support(alpha) == u}


# --------------------------------------------------------------------------
# polynomials


def _sqrt_exact(q):
    """Square root that stays a Fraction when ``q`` is a rational square."""
    if isinstance(q, (int, Fraction)):
        q = Fraction(q)
        n, d = q.numerator, q.denominator
        rn, rd = math.isqrt(n), math.isqrt(d)
        if rn * rn == n and rd * rd == d:
            return Fraction(rn, rd)
    return math.sqrt(q)


class Polynomial:
    """Sparse multivariate polynomial: a map from exponent tuples to coefficients."""

    __slots__ = ("d", "terms")

    def __init__(self, d: int, terms: Mapping | None = None):
        self.d = int(d)
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.d or min(alpha, default=0) < 0:
                raise InputError(f"exponent {alpha} does not fit dimension {self.d}")
            if c != 0:
                clean[alpha] = clean.get(alpha, 0) + c
        self.terms = {a: c for a, c in clean.items() if c != 0}

    @classmethod
    def constant(cls, d: int, c=1) -> "Polynomial":
        return cls(d, {(0,) * d: c})

    @classmethod
    def variable(cls, d: int, i: int) -> "Polynomial":
        """The coordinate polynomial x_i (``i`` is 1-based)."""
        alpha = [0] * d
        alpha[i - 1] = 1
        return cls(d, {tuple(alpha): 1})

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.d, other)
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out.get(a, 0) + c
        return Polynomial(self.d, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.d, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.d, {a: c * other for a, c in self.terms.items()})
        self._check(other)
        out = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                out[key] = out.get(key, 0) + ca * cb
        return Polynomial(self.d, out)

    __rmul__ = __mul__

    def _check(self, other):
        if other.d != self.d:
            raise InputError("polynomials of different dimension")

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.d == other.d and self.terms == other.terms

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for alpha in sorted(self.terms, key=multi_index_key):
            mono = "*".join(
                f"x{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a
            )
            parts.append(f"{self.terms[alpha]}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(parts) + ")"

    def __call__(self, x):
        """Evaluate at one point (length d) or at a batch of shape (n, d)."""
        x = np.asarray(x, dtype=float)
        batch = x.ndim == 2
        pts = x if batch else x.reshape(1, -1)
        if pts.shape[1] != self.d:
            raise InputError(f"point dimension {pts.shape[1]} != {self.d}")
        out = np.zeros(pts.shape[0])
        for alpha, c in self.terms.items():
            out += float(c) * np.prod(pts ** np.asarray(alpha), axis=1)
        return out if batch else float(out[0])

    def coefficient(self, alpha):
        return self.terms.get(tuple(alpha), 0)


# --------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class UniformWeight:
    """Uniform probability density 1/2 on [-1, 1] in each of ``d`` coordinates."""

    d: int = 1

    def moment(self, alpha):
        out = Fraction(1)
        for a in alpha:
            if a % 2:
                return Fraction(0)
            out *= Fraction(1, a + 1)
        return out


@dataclass(frozen=True)
class MomentWeight:
    """Weight described only by its moments, ``moments[alpha] = E[X^alpha]``."""

    d: int
    moments: Mapping | Callable = field(repr=False)

    def moment(self, alpha):
        alpha = tuple(alpha)
        if callable(self.moments):
            return self.moments(alpha)
        try:
            return self.moments[alpha]
        except KeyError:
            raise InputError(f"moment for multi-index {alpha} is not available") from None


def inner_product(p: Polynomial, q: Polynomial, weight) -> object:
    total = 0
    for a, ca in p.terms.items():
        for b, cb in q.terms.items():
            total += ca * cb * weight.moment(tuple(x + y for x, y in zip(a, b)))
    return total


def normalize(p: Polynomial, weight=None) -> Polynomial:
    """Scale ``p`` to unit norm under ``weight`` (uniform on [-1, 1] by default)."""
    weight = weight or UniformWeight(p.d)
    norm2 = inner_product(p, p, weight)
    if p.is_zero() or norm2 <= 0:
        raise InputError("cannot normalize a polynomial of zero norm")
    root = _sqrt_exact(norm2)
    return p * (1 / root if isinstance(root, Fraction) else 1.0 / root)


# --------------------------------------------------------------------------
# Legendre family


@functools.lru_cache(maxsize=None)
def _legendre_terms(n: int) -> tuple:
    prev, cur = {0: Fraction(1)}, {1: Fraction(1)}
    if n == 0:
        return tuple(prev.items())
    for k in range(1, n):
        nxt = {}
        for e, c in cur.items():
            nxt[e + 1] = nxt.get(e + 1, 0) + Fraction(2 * k + 1, k + 1) * c
        for e, c in prev.items():
            nxt[e] = nxt.get(e, 0) - Fraction(k, k + 1) * c
        prev, cur = cur, {e: c for e, c in nxt.items() if c}
    return tuple(cur.items())


def legendre(n: int) -> Polynomial:
    """Legendre polynomial P_n on [-1, 1] with P_n(1) = 1, exact rational coefficients."""
    if n < 0:
        raise InputError("Legendre degree must be nonnegative")
    return Polynomial(1, {(e,): c for e, c in _legendre_terms(n)})


def normalized_legendre(n: int) -> Polynomial:
    """sqrt(2n + 1) P_n: unit norm under the uniform density on [-1, 1]."""
    return legendre(n) * _sqrt_exact(2 * n + 1)


def tensor_legendre(alpha) -> Polynomial:
    """Normalized tensor-product Legendre polynomial of multi-degree ``alpha``."""
    alpha = tuple(int(a) for a in alpha)
    d = len(alpha)
    scale = _sqrt_exact(math.prod(2 * a + 1 for a in alpha))
    terms = {(0,) * d: scale}
    for i, a in enumerate(alpha):
        if a == 0:
            continue
        nxt = {}
        for mono, c in terms.items():
            for (e,), pc in legendre(a).terms.items():
                key = mono[:i] + (e,) + mono[i + 1:]
                nxt[key] = nxt.get(key, 0) + c * pc
        terms = nxt
    return Polynomial(d, terms)


def legendre_table(max_degree: int, x) -> np.ndarray:
    """Values of the normalized Legendre polynomials 0..max_degree at points ``x``.

    Returns an array of shape ``(max_degree + 1, len(x))``, computed with the
    three-term recurrence.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for k in range(1, max_degree):
        out[k + 1] = ((2 * k + 1) * x * out[k] - k * out[k - 1]) / (k + 1)
    scale = np.sqrt(2 * np.arange(max_degree + 1) + 1.0)
    return out * scale.reshape((-1,) + (1,) * x.ndim)


# --------------------------------------------------------------------------
# bases


@dataclass(frozen=True)
class Basis:
    """An orthonormal (or orthogonal) polynomial family with its weight.

    For ``kind == "legendre"`` elements are generated on demand from their
    multi-index.  For ``kind == "gram_schmidt"`` the elements are the
    precomputed polynomials, one per monomial in ``monomials``.
    """

    d: int
    kind: str = "legendre"
    weight: object = None
    monomials: tuple = ()
    elements: tuple = ()
    condition: float = 1.0

    def element(self, alpha) -> Polynomial:
        if self.kind == "legendre":
            alpha = tuple(alpha)
            if len(alpha) != self.d:
                raise InputError(f"multi-index {alpha} does not match dimension {self.d}")
            return tensor_legendre(alpha)
        try:
            return self.elements[self.monomials.index(tuple(alpha))]
        except ValueError:
            raise InputError(f"basis holds no element for {tuple(alpha)}") from None

    def __len__(self):
        return len(self.elements)


def legendre_basis(d: int) -> Basis:
    return Basis(d=d, kind="legendre", weight=UniformWeight(d))


def tensor(alpha, basis: Basis) -> Polynomial:
    """Tensor-product basis element for ``alpha`` in an independent-marginal basis."""
    if basis.kind != "legendre":
        raise InputError("tensor products need an independent-marginal basis")
    return basis.element(alpha)


def gram_schmidt_from_moments(moments, count: int, d: int | None = None, normalized: bool = False) -> Basis:
    """Orthogonalize the first ``count`` monomials using only the moments of the weight.

    ``<X^a, X^b> = E[X^(a+b)]``, so the Gram matrix is read straight from the
    moment map.  Modified Gram-Schmidt is used; each output keeps a unit
    leading coefficient on its own monomial (so the change of basis is
    unit lower triangular) unless ``normalized`` is set.

    Raises
    ------
    InputError
        When a needed moment is missing or the Gram matrix is not positive
        definite.  A ``RuntimeWarning`` is emitted for condition numbers above
        1e12.
    """
    if count < 1:
        raise InputError("count must be at least 1")
    if d is None:
        if callable(moments) or not moments:
            raise InputError("dimension must be given for callable moments")
        d = len(next(iter(moments)))
    weight = moments if hasattr(moments, "moment") else MomentWeight(d, moments)
    monos = tuple(itertools.islice(graded_multi_indices(d, 10 ** 6), count))

    gram = np.empty((count, count))
    for i, a in enumerate(monos):
        for j in range(i, count):
            b = monos[j]
            gram[i, j] = gram[j, i] = float(weight.moment(tuple(x + y for x, y in zip(a, b))))
    cond = float(np.linalg.cond(gram)) if count > 1 else 1.0
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise InputError(
            f"moment matrix is not positive definite (condition estimate {cond:.3g})"
        ) from None
    if cond > GS_CONDITION_WARNING:
        warnings.warn(
            f"moment matrix is ill-conditioned (condition estimate {cond:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )

    def ip(u, v):
        return float(u @ gram @ v)

    vecs = []
    for i in range(count):
        v = np.zeros(count)
        v[i] = 1.0
        for q in vecs:
            v = v - ip(v, q) / ip(q, q) * q
        vecs.append(v)
    if normalized:
        vecs = [v / math.sqrt(ip(v, v)) for v in vecs]
    elements = tuple(
        Polynomial(d, {monos[k]: float(v[k]) for k in range(count) if v[k] != 0}) for v in vecs
    )
    return Basis(
        d=d,
        kind="gram_schmidt",
        weight=weight,
        monomials=monos,
        elements=elements,
        condition=cond,
    )
