"""Cooperative games over input subsets and their Shapley-type attributions.

Coalitions are handled in two forms.  The public API takes any iterable of
1-based input indices and normalizes it to a sorted tuple (``(1, 3)`` is the
coalition {1, 3}); internally a coalition is an int bitmask with bit ``i-1``
set for input ``i``.

All attribution routines are closed-form sums.  Combinatorial weights are
exact :class:`~fractions.Fraction` objects, so a game with rational values
yields exact rational attributions and a game with float values yields
floats.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ._rational import format_number, parse_number
from .errors import InputError

MAX_PLAYERS = 24
MAX_PERMUTATION_PLAYERS = 8

Coalition = tuple


def coalition(u) -> tuple:
    """Normalize ``u`` (iterable of 1-based indices, or one index) to a sorted tuple."""
    if isinstance(u, (int, np.integer)):
        u = (int(u),)
    out = tuple(sorted({int(i) for i in u}))
    if out and out[0] < 1:
        raise InputError(f"coalition indices are 1-based, got {out}")
    return out


def to_mask(u) -> int:
    mask = 0
    for i in coalition(u):
        mask |= 1 << (i - 1)
    return mask


def from_mask(mask: int) -> tuple:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def coalition_key(u) -> str:
    """JSON key form: comma-separated sorted indices, "" for the empty set."""
    return ",".join(str(i) for i in coalition(u))


def parse_coalition_key(key: str) -> tuple:
    key = key.strip()
    if not key:
        return ()
    try:
        return coalition(int(part) for part in key.split(","))
    except ValueError as exc:
        raise InputError(f"bad coalition key {key!r}") from exc


def _check_dimension(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise InputError(f"dimension must be a positive integer, got {d!r}")
    if d > MAX_PLAYERS:
        raise InputError(
            f"d={d} exceeds the exact-enumeration limit of {MAX_PLAYERS} inputs"
        )


def _submasks(mask: int):
    """All submasks of ``mask``, including 0 and ``mask`` itself."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _inverse_binomial(n: int, k: int) -> Fraction:
    return Fraction(1, math.comb(n, k))


class Game:
    """A total map from the 2^d coalitions of ``[1, d]`` to values, zero on the empty set.

    Parameters
    ----------
    d : int
        Number of players (inputs).
    values : sequence
        ``values[mask]`` is the value of the coalition encoded by ``mask``.
    """

    __slots__ = ("d", "_values")

    def __init__(self, d: int, values: Sequence):
        _check_dimension(d)
        values = tuple(values)
        if len(values) != 1 << d:
            raise InputError(f"a game on {d} players needs {1 << d} values, got {len(values)}")
        if values[0] != 0:
            raise InputError("the empty coalition must have value 0")
        self.d = int(d)
        self._values = values

    @classmethod
    def from_function(cls, d: int, func: Callable[[tuple], object]) -> "Game":
        """Tabulate ``func(coalition_tuple)`` over all coalitions."""
        _check_dimension(d)
        return cls(d, [func(from_mask(m)) for m in range(1 << d)])

    @classmethod
    def from_mapping(cls, d: int, mapping: Mapping) -> "Game":
        _check_dimension(d)
        values = [None] * (1 << d)
        for key, val in mapping.items():
            mask = to_mask(parse_coalition_key(key) if isinstance(key, str) else key)
            if mask >> d:
                raise InputError(f"coalition {from_mask(mask)} has an index above d={d}")
            values[mask] = val
        missing = [from_mask(m) for m, v in enumerate(values) if v is None]
        if missing:
            raise InputError(f"game is not total, missing coalitions {missing[:5]}")
        return cls(d, values)

    @property
    def values(self) -> tuple:
        return self._values

    def value(self, u) -> object:
        mask = to_mask(u)
        if mask >> self.d:
            raise InputError(f"coalition {coalition(u)} has an index above d={self.d}")
        return self._values[mask]

    def __call__(self, u):
        return self.value(u)

    def value_at(self, mask: int):
        return self._values[mask]

    def __add__(self, other: "Game") -> "Game":
        if other.d != self.d:
            raise InputError("cannot add games of different dimension")
        return Game(self.d, [a + b for a, b in zip(self._values, other._values)])

    def scale(self, c) -> "Game":
        return Game(self.d, [c * v for v in self._values])

    def restrict(self, drop: int) -> "Game":
        """Restriction to the players other than ``drop``, relabelled 1..d-1 in order."""
        if self.d < 2:
            raise InputError("cannot restrict a one-player game")
        _check_index(drop, self.d)
        low = (1 << (drop - 1)) - 1
        values = []
        for m in range(1 << (self.d - 1)):
            full = (m & low) | ((m & ~low) << 1)
            values.append(self._values[full])
        return Game(self.d - 1, values)

    def __eq__(self, other):
        return isinstance(other, Game) and self.d == other.d and self._values == other._values

    def __hash__(self):
        return hash((self.d, self._values))

    def __repr__(self):
        return f"Game(d={self.d}, values={list(self._values)!r})"

    def to_json_obj(self) -> dict:
        return {
            "d": self.d,
            "values": {coalition_key(from_mask(m)): format_number(v) for m, v in enumerate(self._values)},
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Game":
        try:
            d = int(obj["d"])
            raw = obj["values"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError("game JSON needs integer 'd' and object 'values'") from exc
        return cls.from_mapping(d, {key: parse_number(v) for key, v in raw.items()})

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=2)

    @classmethod
    def loads(cls, text: str) -> "Game":
        return cls.from_json_obj(json.loads(text))


def _check_index(i, d: int) -> None:
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= d:
        raise InputError(f"input index {i!r} outside [1, {d}]")


@dataclass(frozen=True)
class Attribution:
    """An attributed value for one subset, with an error bound (0 for exact paths)."""

    subset: tuple
    value: object
    error_bound: object = 0
    method: str = "exact-enumeration"

    def __post_init__(self):
        if self.error_bound < 0:
            raise InputError("error bound must be nonnegative")

    @property
    def interval(self) -> tuple:
        return (self.value - self.error_bound, self.value + self.error_bound)


def shapley(game: Game, i: int):
    """Shapley value of player ``i``: the weighted average of its marginal contributions."""
    d = game.d
    _check_index(i, d)
    bit = 1 << (i - 1)
    vals = game.values
    by_size = [0] * d
    for v in range(1 << d):
        if v & bit:
            continue
        by_size[v.bit_count()] += vals[v | bit] - vals[v]
    total = sum(s * _inverse_binomial(d - 1, k) for k, s in enumerate(by_size))
    return total * Fraction(1, d)


def shapley_vector(game: Game) -> list:
    return [shapley(game, i) for i in range(1, game.d + 1)]


def shapley_permutation(game: Game, i: int):
    """Shapley value as the average marginal contribution over all d! player orders."""
    d = game.d
    _check_index(i, d)
    if d > MAX_PERMUTATION_PLAYERS:
        raise InputError(f"permutation formula refuses d={d} > {MAX_PERMUTATION_PLAYERS}")
    bit = 1 << (i - 1)
    vals = game.values
    total = 0
    for order in itertools.permutations(range(d)):
        prefix = 0
        for p in order:
            if p == i - 1:
                break
            prefix |= 1 << p
        total += vals[prefix | bit] - vals[prefix]
    return total * Fraction(1, math.factorial(d))


def shapley_owen(game: Game, u):
    """Shapley-Owen interaction index of the coalition ``u``."""
    d = game.d
    u = coalition(u)
    if not u:
        raise InputError("Shapley-Owen index needs a nonempty coalition")
    umask = to_mask(u)
    if umask >> d:
        raise InputError(f"coalition {u} has an index above d={d}")
    k = len(u)
    signed = [(w, -1 if (k - w.bit_count()) % 2 else 1) for w in _submasks(umask)]
    vals = game.values
    n = d - k
    by_size = [0] * (n + 1)
    for v in range(1 << d):
        if v & umask:
            continue
        inner = 0
        for w, sign in signed:
            if sign > 0:
                inner += vals[v | w]
            else:
                inner -= vals[v | w]
        by_size[v.bit_count()] += inner
    total = sum(s * _inverse_binomial(n, m) for m, s in enumerate(by_size))
    return total * Fraction(1, n + 1)


def two_factor_interaction(game: Game, i: int, j: int):
    """Pairwise interaction of ``i`` and ``j`` from second differences of the game.

    Positive values indicate a synergistic pair, negative an antagonistic one
    (see :func:`interaction_kind`).
    """
    d = game.d
    _check_index(i, d)
    _check_index(j, d)
    if i == j:
        raise InputError("two-factor interaction needs two distinct inputs")
    bi, bj = 1 << (i - 1), 1 << (j - 1)
    vals = game.values
    by_size = [0] * (d - 1)
    for v in range(1 << d):
        if v & (bi | bj):
            continue
        by_size[v.bit_count()] += vals[v | bi | bj] - vals[v | bi] - vals[v | bj] + vals[v]
    total = sum(s * _inverse_binomial(d - 2, m) for m, s in enumerate(by_size))
    return total * Fraction(1, d - 1)


def interaction_kind(value) -> str:
    if value > 0:
        return "synergistic"
    if value < 0:
        return "antagonistic"
    return "none"


def unanimity_decompose(game: Game) -> dict:
    """Harsanyi dividends: the unique ``c`` with val(u) = sum of c_v over nonempty v inside u.

    Returns a dict keyed by coalition tuples; zero dividends are omitted.
    """
    d = game.d
    c = list(game.values)
    for b in range(d):
        bit = 1 << b
        for m in range(1 << d):
            if m & bit:
                c[m] -= c[m ^ bit]
    return {from_mask(m): c[m] for m in range(1, 1 << d) if c[m] != 0}


def game_from_dividends(d: int, dividends: Mapping) -> Game:
    """Rebuild a game from Harsanyi dividends (inverse of :func:`unanimity_decompose`)."""
    _check_dimension(d)
    vals = [0] * (1 << d)
    for v, c in dividends.items():
        vals[to_mask(v)] += c
    for b in range(d):
        bit = 1 << b
        for m in range(1 << d):
            if m & bit:
                vals[m] += vals[m ^ bit]
    return Game(d, vals)


def shapley_from_dividends(dividends: Mapping, i: int):
    """Each dividend is split equally among the members of its coalition."""
    total = 0
    for v, c in dividends.items():
        v = coalition(v)
        if i in v:
            total += c * Fraction(1, len(v))
    return total


def _check_variances(sigma2: Mapping) -> dict:
    out = {}
    for v, s in sigma2.items():
        if s < 0:
            raise InputError(f"negative partial variance {s} for coalition {coalition(v)}")
        out[coalition(v)] = s
    return out


def mobius_shapley_owen(sigma2: Mapping, u):
    """Shapley-Owen effect from partial-effect variances (independent inputs).

    Each superset ``v`` of ``u`` contributes ``sigma2[v] / (|v| - |u| + 1)``.
    """
    u = coalition(u)
    if not u:
        raise InputError("Shapley-Owen index needs a nonempty coalition")
    sigma2 = _check_variances(sigma2)
    us = set(u)
    total = 0
    for v, s in sigma2.items():
        if us.issubset(v):
            total += s * Fraction(1, len(v) - len(u) + 1)
    return total


def shapley_owen_brackets(sigma2: Mapping, u) -> tuple:
    """Return ``(lower, upper, sharpened_upper)`` around the Shapley-Owen effect of ``u``.

    ``lower`` is the partial variance of ``u`` itself, ``upper`` the superset
    importance (sum over supersets), and ``sharpened_upper`` the midpoint of
    the closed Sobol index of ``u`` and the superset importance, capped at
    ``upper``.
    """
    u = coalition(u)
    if not u:
        raise InputError("brackets need a nonempty coalition")
    sigma2 = _check_variances(sigma2)
    us = set(u)
    lower = sigma2.get(u, 0)
    upper = sum((s for v, s in sigma2.items() if us.issubset(v)), 0)
    closed = sum((s for v, s in sigma2.items() if v and set(v).issubset(us)), 0)
    sharpened = (closed + upper) * Fraction(1, 2)
    if sharpened > upper:
        sharpened = upper
    return lower, upper, sharpened


def closed_form_linear(b: Sequence, variances: Sequence) -> list:
    """Shapley effects of ``a + b.x`` with independent inputs: ``b_i^2 Var(X_i)``."""
    if len(b) != len(variances):
        raise InputError(f"{len(b)} coefficients but {len(variances)} variances")
    return [bi * bi * vi for bi, vi in zip(b, variances)]


def graph_game(w: Sequence[Sequence]) -> Game:
    """Game valued by the total weight of the subgraph induced by each coalition.

    Pairs are counted as ordered pairs, so an edge {i, j} contributes
    ``w[i][j] + w[j][i]`` and a loop contributes ``w[i][i]``.
    """
    d = len(w)
    _check_symmetric(w)
    vals = []
    for m in range(1 << d):
        members = [i for i in range(d) if m >> i & 1]
        vals.append(sum((w[i][j] for i in members for j in members), 0))
    return Game(d, vals)


def _check_symmetric(w) -> None:
    d = len(w)
    for i in range(d):
        if len(w[i]) != d:
            raise InputError("weight matrix must be square")
        for j in range(i):
            if w[i][j] != w[j][i]:
                raise InputError(f"weight matrix is not symmetric at ({i + 1}, {j + 1})")


def closed_form_graph(w: Sequence[Sequence]) -> list:
    """Shapley values of :func:`graph_game` in O(d^2)."""
    _check_symmetric(w)
    d = len(w)
    return [w[i][i] + sum((w[i][j] for j in range(d) if j != i), 0) for i in range(d)]


def _conditional_covariance(sigma: np.ndarray, rest: list, given: list) -> np.ndarray:
    """Covariance of X_rest given X_given, by Schur complement."""
    s_rr = sigma[np.ix_(rest, rest)]
    if not given:
        return s_rr
    s_rg = sigma[np.ix_(rest, given)]
    s_gg = sigma[np.ix_(given, given)]
    return s_rr - s_rg @ np.linalg.solve(s_gg, s_rg.T)


def closed_form_linear_gaussian(b: Sequence, mu: Sequence, cov) -> np.ndarray:
    """Shapley effects of ``a + b.X`` for ``X ~ N(mu, cov)``.

    The marginal contribution of input ``i`` to a coalition ``u`` is
    ``Cov(X_i, b_R.X_R | X_u)^2 / Var(X_i | X_u)`` with ``R`` the complement
    of ``u``; the mean does not enter.
    """
    b = np.asarray(b, dtype=float)
    cov = np.asarray(cov, dtype=float)
    d = b.size
    if cov.shape != (d, d) or np.asarray(mu).shape != (d,):
        raise InputError("b, mu and the covariance must agree in dimension")
    _check_dimension(d)
    if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * max(1.0, np.abs(cov).max())):
        raise InputError("covariance matrix is not symmetric")
    try:
        np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise InputError("covariance matrix is singular or not positive definite") from exc

    out = np.zeros(d)
    for i in range(d):
        others = [j for j in range(d) if j != i]
        total = 0.0
        for size in range(d):
            weight = 1.0 / math.comb(d - 1, size)
            for given in itertools.combinations(others, size):
                rest = [j for j in range(d) if j not in given]
                cond = _conditional_covariance(cov, rest, list(given))
                pos = rest.index(i)
                c = cond[pos] @ b[rest]
                total += weight * c * c / cond[pos, pos]
        out[i] = total / d
    return out
