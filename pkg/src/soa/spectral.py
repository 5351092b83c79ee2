"""Shapley-Owen effects assembled from PCE coefficients.

Every non-constant PCE term ``y_a Psi_a`` contributes ``y_a^2`` times the
Shapley-Owen value of the 0/1 game ``val_a(u) = [support(a) <= u]``.  That
elementary value depends on ``a`` only through its support ``s``, and it does
not depend on the model, so it is tabulated once per (d, s, u).

The error of a truncated expansion is at most ``kappa_u * eps_l`` where
``eps_l`` is the unexplained variance and ``kappa_u`` bounds every
elementary value.  ``eps_l`` is computed against the quadrature estimate of
the model variance, so the bound is rigorous when that quadrature is exact
(polynomial models in uniform inputs, within the degree hint).  For models
composed with a non-affine inverse Rosenblatt map the estimate converges
slowly and the bound holds only up to its error.

For dependent inputs the expansion lives on the transformed coordinates.
Its spectral values are the Shapley-Owen values of the transformed game,
which agree with those of the original inputs only on coalitions that are
prefixes of the conditioning order; :func:`ordered_shapley_owen` reads every
coalition off a prefix instead.
"""

from __future__ import annotations

import itertools
import json
import math
import struct
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np

from . import game as _game
from ._rational import format_number, parse_number
from .basis import support
from .errors import CoverageError, InputError
from .pce import Pce, SparseConfig, build_sparse, truncation_error
from .transform import DistributionSpec

TABLE_FORMAT = "soa-elementary-table"
TABLE_VERSION = 1
DEFAULT_MAX_ORDER = 6
MAX_TABLE_ENTRIES = 1_000_000
LITERAL_LIMIT = 12
_BINARY_MAGIC = b"SOAT"


def elementary_value(alpha, u) -> int:
    """``val_alpha(u)``: 1 iff every input used by ``alpha`` lies in ``u``."""
    if not any(alpha):
        raise InputError("the elementary game is undefined for the zero multi-index")
    return int(set(support(alpha)) <= set(_game.coalition(u)))


def membership_game(s, d: int) -> _game.Game:
    """The elementary game of any multi-index with support ``s``."""
    smask = _game.to_mask(s)
    return _game.Game(d, [1 if (w & smask) == smask else 0 for w in range(1 << d)])


def _counted_shapley_owen(k: int, j: int, contained: bool, d: int) -> Fraction:
    # Shapley-Owen sum regrouped by |v|: the inner alternating sum equals
    # [u <= s][s \ u <= v], and the number of v of size m outside u that
    # contain s \ u is C(n - r, m - r).
    if not contained:
        return Fraction(0)
    n, r = d - j, k - j
    total = sum(Fraction(math.comb(n - r, m - r), math.comb(n, m)) for m in range(r, n + 1))
    return total / (n + 1)


def elementary_shapley_owen(s, u, d: int) -> Fraction:
    """Exact Shapley-Owen value of the membership game of ``s`` at target ``u``.

    Up to d = 12 this evaluates the defining double sum over the full game;
    beyond, the same sum is evaluated with subsets grouped by size.
    """
    s, u = _game.coalition(s), _game.coalition(u)
    if not s or not u:
        raise InputError("support and target sets must be nonempty")
    if max(s + u) > d:
        raise InputError(f"sets {s}, {u} exceed dimension {d}")
    if d <= LITERAL_LIMIT:
        return Fraction(_game.shapley_owen(membership_game(s, d), u))
    return _counted_shapley_owen(len(s), len(u), set(u) <= set(s), d)


def kappa(u, d: int) -> Fraction:
    """Model-independent bound on ``|Sh_u(val_alpha)|`` (literal inverse-binomial sum)."""
    u = _game.coalition(u)
    if not u:
        raise InputError("kappa needs a nonempty subset")
    k = len(u)
    if k > d:
        raise InputError(f"|u| = {k} exceeds d = {d}")
    n = d - k
    inner = sum(Fraction(math.comb(n, m), math.comb(n, m)) for m in range(n + 1))
    return Fraction(2 ** (k - 1), n + 1) * inner


# --------------------------------------------------------------------------
# elementary table


def _sets_up_to(d: int, order: int):
    for size in range(1, order + 1):
        for combo in itertools.combinations(range(1, d + 1), size):
            yield combo


class ElementaryTable:
    """Exact elementary Shapley-Owen values for all supports and targets of size <= ``max_order``."""

    def __init__(self, d: int, max_order: int, entries: dict):
        self.d = d
        self.max_order = max_order
        self._entries = dict(entries)

    @classmethod
    def compute(cls, d: int, max_order: int = DEFAULT_MAX_ORDER) -> "ElementaryTable":
        if d < 1 or d > _game.MAX_PLAYERS:
            raise InputError(f"table dimension must lie in [1, {_game.MAX_PLAYERS}]")
        max_order = min(max_order, d)
        if max_order < 1:
            raise InputError("max_order must be at least 1")
        n_sets = sum(math.comb(d, k) for k in range(1, max_order + 1))
        if n_sets * n_sets > MAX_TABLE_ENTRIES:
            raise InputError(
                f"table for d={d}, max_order={max_order} would hold {n_sets ** 2} entries "
                f"(limit {MAX_TABLE_ENTRIES}); lower max_order"
            )
        sets = list(_sets_up_to(d, max_order))
        # the value only depends on (|s|, |u|, u <= s); compute each class once
        by_class: dict = {}
        entries = {}
        for s in sets:
            for u in sets:
                contained = set(u) <= set(s)
                cls_key = (len(s), len(u), contained)
                if cls_key not in by_class:
                    by_class[cls_key] = elementary_shapley_owen(s, u, d)
                entries[(s, u)] = by_class[cls_key]
        return cls(d, max_order, entries)

    def __len__(self):
        return len(self._entries)

    def __eq__(self, other):
        return (
            isinstance(other, ElementaryTable)
            and (self.d, self.max_order) == (other.d, other.max_order)
            and self._entries == other._entries
        )

    def covers(self, s) -> bool:
        s = _game.coalition(s)
        return 1 <= len(s) <= self.max_order and s[-1] <= self.d

    def get(self, s, u) -> Fraction:
        s, u = _game.coalition(s), _game.coalition(u)
        try:
            return self._entries[(s, u)]
        except KeyError:
            if not self.covers(s):
                raise CoverageError(
                    f"elementary table (d={self.d}, max_order={self.max_order}) "
                    f"has no support set {{{','.join(map(str, s))}}}"
                ) from None
            raise CoverageError(
                f"elementary table (d={self.d}, max_order={self.max_order}) "
                f"has no target set {{{','.join(map(str, u))}}}"
            ) from None

    def extended(self, pairs: Iterable) -> "ElementaryTable":
        """Copy of the table with the given (support, target) pairs computed and added."""
        entries = dict(self._entries)
        for s, u in pairs:
            s, u = _game.coalition(s), _game.coalition(u)
            if (s, u) not in entries:
                entries[(s, u)] = elementary_shapley_owen(s, u, self.d)
        return ElementaryTable(self.d, self.max_order, entries)

    def items(self):
        return sorted(self._entries.items(), key=lambda kv: (len(kv[0][0]), kv[0][0], len(kv[0][1]), kv[0][1]))

    # persistence -----------------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "format": TABLE_FORMAT,
            "version": TABLE_VERSION,
            "d": self.d,
            "max_order": self.max_order,
            "entries": [
                {"s": list(s), "u": list(u), "value": format_number(v)} for (s, u), v in self.items()
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json_obj(cls, obj) -> "ElementaryTable":
        if obj.get("format") != TABLE_FORMAT or obj.get("version") != TABLE_VERSION:
            raise InputError("not an elementary table file (format/version header mismatch)")
        try:
            entries = {
                (_game.coalition(e["s"]), _game.coalition(e["u"])): parse_number(e["value"])
                for e in obj["entries"]
            }
            return cls(int(obj["d"]), int(obj["max_order"]), entries)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed elementary table: {exc}") from exc

    @classmethod
    def loads(cls, text: str) -> "ElementaryTable":
        return cls.from_json_obj(json.loads(text))

    def to_bytes(self) -> bytes:
        """Binary companion: header, then (s mask, u mask, numerator, denominator) per entry."""
        items = self.items()
        out = [_BINARY_MAGIC, struct.pack("<HHHI", TABLE_VERSION, self.d, self.max_order, len(items))]
        for (s, u), v in items:
            v = Fraction(v)
            out.append(struct.pack("<IIqQ", _game.to_mask(s), _game.to_mask(u), v.numerator, v.denominator))
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "ElementaryTable":
        if data[:4] != _BINARY_MAGIC:
            raise InputError("not a binary elementary table")
        version, d, max_order, count = struct.unpack_from("<HHHI", data, 4)
        if version != TABLE_VERSION:
            raise InputError(f"unsupported binary table version {version}")
        offset = 4 + struct.calcsize("<HHHI")
        size = struct.calcsize("<IIqQ")
        if len(data) != offset + count * size:
            raise InputError("binary elementary table is truncated")
        entries = {}
        for k in range(count):
            smask, umask, num, den = struct.unpack_from("<IIqQ", data, offset + k * size)
            entries[(_game.from_mask(smask), _game.from_mask(umask))] = Fraction(num, den)
        return cls(d, max_order, entries)


def precompute_table(d: int, max_order: int = DEFAULT_MAX_ORDER, path=None) -> ElementaryTable:
    """Compute the table and, when ``path`` is given, persist it as JSON plus a ``.bin`` companion."""
    table = ElementaryTable.compute(d, max_order)
    if path is not None:
        save_table(table, path)
    return table


def save_table(table: ElementaryTable, path) -> None:
    from ._io import atomic_write

    path = Path(path)
    atomic_write(path, table.dumps().encode())
    atomic_write(path.with_suffix(path.suffix + ".bin"), table.to_bytes())


def load_table(path) -> ElementaryTable:
    path = Path(path)
    try:
        if path.suffix == ".bin":
            return ElementaryTable.from_bytes(path.read_bytes())
        return ElementaryTable.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read table {path}: {exc}") from exc
    except (ValueError, struct.error) as exc:
        raise InputError(f"cannot parse table {path}: {exc}") from exc


# --------------------------------------------------------------------------
# spectral assembly


@dataclass(frozen=True)
class SpectralResult:
    subset: tuple
    estimate: float
    error_bound: float
    kappa: Fraction
    epsilon_l: float
    method: str = "spectral"

    @property
    def interval(self) -> tuple:
        return (self.estimate - self.error_bound, self.estimate + self.error_bound)


def spectral_shapley_owen(pce: Pce, u, table: ElementaryTable, *, extend: bool = False) -> SpectralResult:
    """Shapley-Owen effect of ``u`` from the squared PCE coefficients.

    Raises :class:`CoverageError` naming the first support set the table lacks,
    unless ``extend`` is set, in which case missing entries are computed on the fly.
    """
    u = _game.coalition(u)
    if not u:
        raise InputError("Shapley-Owen effects need a nonempty subset")
    if table.d != pce.d:
        raise InputError(f"table dimension {table.d} does not match the PCE dimension {pce.d}")
    if u[-1] > pce.d:
        raise InputError(f"subset {u} exceeds dimension {pce.d}")
    terms = pce.terms
    if extend:
        missing = {(support(a), u) for a in terms}
        table = table.extended(missing)
    parts = [y * y * float(table.get(support(a), u)) for a, y in terms.items()]
    estimate = math.fsum(parts)
    eps_l = truncation_error(pce)
    k = kappa(u, pce.d)
    return SpectralResult(u, estimate, float(k) * eps_l, k, eps_l)


def end_to_end(model, dist: DistributionSpec, cfg: SparseConfig | None, u,
               table: ElementaryTable | None = None, *, seed: int = 0) -> SpectralResult:
    """Rosenblatt-compose ``model``, build its sparse PCE, and assemble the effect of ``u``.

    With dependent inputs the result is the effect in the transformed
    coordinates; see the module notes and :func:`ordered_shapley_owen`.
    """
    pce = build_sparse(model, dist, cfg, seed=seed)
    if table is None:
        table = ElementaryTable(pce.d, 0, {})
        return spectral_shapley_owen(pce, u, table, extend=True)
    return spectral_shapley_owen(pce, u, table)


# --------------------------------------------------------------------------
# dependent inputs: values read off prefix sets of several orderings


def covering_orderings(d: int) -> list:
    """Orderings of 1..d such that every coalition is a prefix of at least one of them.

    Greedy over permutations in lexicographic order.
    """
    if d > 8:
        raise InputError("covering orderings are limited to d <= 8")
    uncovered = set(range(1, 1 << d))
    chosen = []
    for perm in itertools.permutations(range(1, d + 1)):
        prefixes = set()
        mask = 0
        for i in perm:
            mask |= 1 << (i - 1)
            prefixes.add(mask)
        if prefixes & uncovered:
            chosen.append(perm)
            uncovered -= prefixes
        if not uncovered:
            break
    return chosen


def ordered_value_game(model, dist: DistributionSpec, cfg: SparseConfig | None = None, *, seed: int = 0):
    """Relative-importance game of dependent inputs, read off PCEs under several orderings.

    For an ordering whose first ``k`` inputs form ``P``, conditioning on the
    first ``k`` transformed coordinates is conditioning on ``X_P``, so
    ``val(P)`` is the PCE variance carried by terms supported inside ``P``.
    Returns ``(game, eps)`` where each value underestimates the true one by
    at most ``eps`` (the largest truncation error over the orderings).
    """
    d = dist.d
    values = [None] * (1 << d)
    values[0] = 0.0
    eps = 0.0
    for ordering in covering_orderings(d):
        pce = build_sparse(model, dist.with_ordering(ordering), cfg, seed=seed)
        eps = max(eps, truncation_error(pce))
        terms = pce.terms
        mask = 0
        for i in ordering:
            mask |= 1 << (i - 1)
            if values[mask] is None:
                values[mask] = math.fsum(
                    y * y for a, y in terms.items() if (_game.to_mask(support(a)) & ~mask) == 0
                )
    return _game.Game(d, values), eps


def ordered_shapley_owen(model, dist: DistributionSpec, cfg: SparseConfig | None, subsets,
                         *, seed: int = 0) -> list:
    """Shapley-Owen effects for dependent inputs via :func:`ordered_value_game`.

    The error bound is ``kappa_u * eps``: every game value errs by a
    one-sided amount in ``[0, eps]``.
    """
    g, eps = ordered_value_game(model, dist, cfg, seed=seed)
    out = []
    for u in subsets:
        u = _game.coalition(u)
        k = kappa(u, d=dist.d)
        out.append(SpectralResult(u, float(_game.shapley_owen(g, u)), float(k) * eps, k, eps, "ordered-pce"))
    return out
