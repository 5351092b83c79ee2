"""Independent reference computations used by the tests.

Nothing here goes through the package's PCE, quadrature or Legendre code:
polynomial models are handled as exact monomial dictionaries and every
expectation is an exact uniform moment.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from soa.game import Game


def uniform_moment(k: int) -> Fraction:
    """E[X^k] for X uniform on [-1, 1]."""
    return Fraction(1, k + 1) if k % 2 == 0 else Fraction(0)


def poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def poly_mean(p: dict) -> Fraction:
    total = Fraction(0)
    for a, c in p.items():
        term = Fraction(c)
        for k in a:
            term *= uniform_moment(k)
        total += term
    return total


def conditional_mean(p: dict, keep: set) -> dict:
    """E[p(X) | X_keep] as a polynomial in the kept coordinates (0-based)."""
    out: dict = {}
    for a, c in p.items():
        factor = Fraction(c)
        reduced = []
        for i, k in enumerate(a):
            if i in keep:
                reduced.append(k)
            else:
                factor *= uniform_moment(k)
                reduced.append(0)
        if factor:
            key = tuple(reduced)
            out[key] = out.get(key, 0) + factor
    return {k: v for k, v in out.items() if v != 0}


def poly_variance(p: dict) -> Fraction:
    m = poly_mean(p)
    return poly_mean(poly_mul(p, p)) - m * m


def relative_importance_game(p: dict, d: int) -> Game:
    """val(u) = Var(E[p(X) | X_u]) for independent uniform inputs, exactly."""
    vals = []
    for mask in range(1 << d):
        keep = {i for i in range(d) if mask >> i & 1}
        vals.append(poly_variance(conditional_mean(p, keep)) if mask else Fraction(0))
    return Game(d, vals)


def poly_eval(p: dict, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    out = np.zeros(x.shape[0])
    for a, c in p.items():
        out += float(c) * np.prod(x ** np.array(a), axis=1)
    return out


class PolyModel:
    """Vectorized callable wrapper around a monomial dictionary."""

    def __init__(self, p: dict, d: int):
        self.p, self.d = p, d

    def evaluate_batch(self, x):
        return poly_eval(self.p, np.asarray(x, dtype=float))

    def __call__(self, x):
        return float(self.evaluate_batch(np.asarray(x, dtype=float).reshape(1, -1))[0])


def random_polynomial(rng: np.random.Generator, d: int, degree: int, terms: int) -> dict:
    """Sparse polynomial with small rational coefficients and total degree <= ``degree``."""
    monomials = [a for a in itertools.product(range(degree + 1), repeat=d) if 0 < sum(a) <= degree]
    picks = rng.choice(len(monomials), size=min(terms, len(monomials)), replace=False)
    p = {}
    for k in picks:
        num = int(rng.integers(-6, 7)) or 1
        den = int(rng.integers(1, 5))
        p[monomials[k]] = Fraction(num, den)
    p[(0,) * d] = Fraction(int(rng.integers(-3, 4)))
    return p


def legendre_monomials(n: int) -> list:
    """Coefficients of the classical Legendre polynomial P_n (ascending powers)."""
    prev, cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    if n == 0:
        return prev
    for k in range(1, n):
        nxt = [Fraction(0)] * (k + 2)
        for i, c in enumerate(cur):
            nxt[i + 1] += Fraction(2 * k + 1, k + 1) * c
        for i, c in enumerate(prev):
            nxt[i] -= Fraction(k, k + 1) * c
        prev, cur = cur, nxt
    return cur


def squared_coefficient(p: dict, alpha: tuple) -> Fraction:
    """y_alpha^2 for the orthonormal tensor Legendre element, exactly."""
    basis = {(): Fraction(1)}
    for i, a in enumerate(alpha):
        coeffs = legendre_monomials(a)
        nxt = {}
        for key, c in basis.items():
            for k, ck in enumerate(coeffs):
                if ck:
                    nxt[key + (k,)] = nxt.get(key + (k,), 0) + c * ck
        basis = nxt
    raw = poly_mean(poly_mul(p, basis))
    scale = Fraction(1)
    for a in alpha:
        scale *= 2 * a + 1
    return raw * raw * scale


def gaussian_linear_game(b, cov) -> Game:
    """val(u) = Var(b.X) - E[Var(b.X | X_u)] for X ~ N(0, cov), by conditioning formulas."""
    b = np.asarray(b, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = b.size
    total = b @ cov @ b
    vals = [0.0]
    for mask in range(1, 1 << d):
        given = [i for i in range(d) if mask >> i & 1]
        rest = [i for i in range(d) if not mask >> i & 1]
        if not rest:
            vals.append(float(total))
            continue
        s_rr = cov[np.ix_(rest, rest)]
        s_rg = cov[np.ix_(rest, given)]
        s_gg = cov[np.ix_(given, given)]
        cond = s_rr - s_rg @ np.linalg.solve(s_gg, s_rg.T)
        vals.append(float(total - b[rest] @ cond @ b[rest]))
    return Game(d, vals)
