"""Fairness constraints over attributions that carry error bounds.

Each attribution is an interval ``[value - bound, value + bound]``.  A
constraint passes when it holds on the whole interval, fails when it holds
nowhere on it, and is indeterminate otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import game as _game
from .errors import InputError

PASS, FAIL, INDETERMINATE = "pass", "fail", "indeterminate"
KINDS = ("threshold", "ratio", "difference")

# Selection-rate style four-fifths figure, applied here to attribution
# ratios by analogy only; it is not the employment-law selection-rate rule.
DISPARATE_IMPACT_RATIO = 0.8


@dataclass(frozen=True)
class Constraint:
    kind: str
    a: tuple
    b: tuple | None = None
    tau: float | None = None
    epsilon: float | None = None
    delta: float | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown constraint kind {self.kind!r}; use one of {', '.join(KINDS)}")
        object.__setattr__(self, "a", _subset(self.a))
        if self.kind == "threshold":
            if self.tau is None or self.tau < 0:
                raise InputError("threshold constraints need tau >= 0")
        else:
            if self.b is None:
                raise InputError(f"{self.kind} constraints compare two subsets (a and b)")
            object.__setattr__(self, "b", _subset(self.b))
            if self.kind == "ratio" and (self.epsilon is None or not self.epsilon > 0):
                raise InputError("ratio constraints need epsilon > 0")
            if self.kind == "difference" and (self.delta is None or self.delta < 0):
                raise InputError("difference constraints need delta >= 0")

    @property
    def subsets(self) -> tuple:
        return (self.a,) if self.b is None else (self.a, self.b)

    def describe(self) -> str:
        if self.label:
            return self.label
        a = _game.coalition_key(self.a)
        if self.kind == "threshold":
            return f"Sh[{a}] <= {self.tau:g}"
        b = _game.coalition_key(self.b)
        if self.kind == "ratio":
            return f"exp(-{self.epsilon:g}) < Sh[{a}] / Sh[{b}] < exp({self.epsilon:g})"
        return f"|Sh[{a}] - Sh[{b}]| <= {self.delta:g}"

    def to_json_obj(self) -> dict:
        obj = {"kind": self.kind}
        if self.kind == "threshold":
            obj.update(subset=list(self.a), tau=self.tau)
        else:
            obj.update(a=list(self.a), b=list(self.b))
            if self.kind == "ratio":
                obj["epsilon"] = self.epsilon
            else:
                obj["delta"] = self.delta
        if self.label:
            obj["label"] = self.label
        return obj


def _subset(u) -> tuple:
    u = _game.coalition(u)
    if not u:
        raise InputError("constraint subsets must be nonempty")
    return u


def threshold(subset, tau: float) -> Constraint:
    return Constraint("threshold", subset, tau=float(tau))


def ratio(a, b, epsilon: float) -> Constraint:
    return Constraint("ratio", a, b, epsilon=float(epsilon))


def difference(a, b, delta: float) -> Constraint:
    return Constraint("difference", a, b, delta=float(delta))


def disparate_impact(a, b, ratio_bound: float = DISPARATE_IMPACT_RATIO) -> Constraint:
    """Ratio band ``(0.8, 1.25)``: each attribution at least four fifths of the other."""
    eps = -math.log(ratio_bound)
    return Constraint("ratio", a, b, epsilon=eps, label=f"disparate-impact analogy ({ratio_bound:g})")


@dataclass(frozen=True)
class Verdict:
    status: str
    margin: float
    inputs: dict
    constraint: Constraint
    diagnostic: str | None = field(default=None)

    def to_json_obj(self) -> dict:
        return {
            "constraint": self.constraint.to_json_obj(),
            "description": self.constraint.describe(),
            "status": self.status,
            "margin": self.margin,
            "inputs": {
                k: {"value": float(v), "error_bound": float(e)} for k, (v, e) in sorted(self.inputs.items())
            },
            "diagnostic": self.diagnostic,
        }


def _as_table(attributions) -> dict:
    """Normalize attributions to ``{coalition: (value, error_bound)}``."""
    if isinstance(attributions, dict):
        items = attributions.items()
        out = {}
        for u, v in items:
            value, bound = v if isinstance(v, tuple) else (v, 0)
            out[_game.coalition(u)] = (value, bound)
        return out
    out = {}
    for att in attributions:
        bound = getattr(att, "error_bound", 0)
        value = getattr(att, "value", None)
        if value is None:
            value = att.estimate
        out[_game.coalition(att.subset)] = (value, bound)
    return out


def _lookup(table, u):
    try:
        value, bound = table[u]
    except KeyError:
        raise InputError(f"no attribution for subset {{{_game.coalition_key(u)}}}") from None
    if bound < 0:
        raise InputError(f"negative error bound for subset {{{_game.coalition_key(u)}}}")
    return value, bound


def check(constraint: Constraint, attributions) -> Verdict:
    """Three-valued verdict of ``constraint`` under interval semantics.

    ``attributions`` maps subsets to ``(value, error_bound)`` pairs (or plain
    values, taken as exact), or is a sequence of objects with ``subset``,
    ``value``/``estimate`` and ``error_bound`` attributes.
    """
    table = _as_table(attributions)
    a, ea = _lookup(table, constraint.a)
    inputs = {_game.coalition_key(constraint.a): (a, ea)}
    a_lo, a_hi = a - ea, a + ea
    if constraint.kind == "threshold":
        tau = constraint.tau
        status = PASS if a_hi <= tau else FAIL if a_lo > tau else INDETERMINATE
        return Verdict(status, float(tau - a), inputs, constraint)

    b, eb = _lookup(table, constraint.b)
    inputs[_game.coalition_key(constraint.b)] = (b, eb)
    b_lo, b_hi = b - eb, b + eb
    if constraint.kind == "difference":
        delta = constraint.delta
        lo, hi = a_lo - b_hi, a_hi - b_lo
        if max(abs(lo), abs(hi)) <= delta:
            status = PASS
        elif lo > delta or hi < -delta:
            status = FAIL
        else:
            status = INDETERMINATE
        return Verdict(status, float(delta - abs(a - b)), inputs, constraint)

    eps = constraint.epsilon
    lower, upper = math.exp(-eps), math.exp(eps)
    if b_lo <= 0 <= b_hi:
        return Verdict(
            INDETERMINATE, -math.inf, inputs, constraint,
            diagnostic=f"denominator interval [{float(b_lo):.6g}, {float(b_hi):.6g}] contains 0; the ratio is unbounded",
        )
    corners = [float(Fraction(x) / Fraction(y)) if _exact(x, y) else float(x) / float(y)
               for x in (a_lo, a_hi) for y in (b_lo, b_hi)]
    r_lo, r_hi = min(corners), max(corners)
    if lower < r_lo and r_hi < upper:
        status = PASS
    elif r_hi <= lower or r_lo >= upper:
        status = FAIL
    else:
        status = INDETERMINATE
    r = float(a) / float(b)
    margin = eps - abs(math.log(r)) if r > 0 else -math.inf
    return Verdict(status, margin, inputs, constraint)


def _exact(x, y) -> bool:
    return isinstance(x, (int, Fraction)) and isinstance(y, (int, Fraction))


def two_input_ratio(g: _game.Game):
    """``Sh_1 / Sh_2`` of a two-player game from its values alone.

    With ``s2 = val({1,2})`` and ``comp(u) = s2 - val(u)`` the ratio is
    ``(val(1) + comp(2)) / (comp(1) + val(2))``.  A zero denominator means
    unbounded disparity and raises :class:`InputError`.
    """
    if g.d != 2:
        raise InputError(f"two_input_ratio needs a two-input game, got d={g.d}")
    total = g.value((1, 2))
    v1, v2 = g.value((1,)), g.value((2,))
    num = v1 + (total - v2)
    den = (total - v1) + v2
    if den == 0:
        raise InputError("zero denominator: Sh_2 = 0, the disparity is unbounded")
    if _exact(num, den):
        return Fraction(num) / Fraction(den)
    return num / den


# --------------------------------------------------------------------------
# JSON


def constraint_from_json_obj(obj) -> Constraint:
    if not isinstance(obj, dict):
        raise InputError(f"constraint must be a JSON object, got {obj!r}")
    kind = obj.get("kind")
    try:
        if obj.get("preset") == "disparate-impact":
            return disparate_impact(obj["a"], obj["b"], float(obj.get("ratio", DISPARATE_IMPACT_RATIO)))
        if kind == "threshold":
            return Constraint("threshold", obj["subset"], tau=float(obj["tau"]), label=obj.get("label"))
        if kind == "ratio":
            return Constraint("ratio", obj["a"], obj["b"], epsilon=float(obj["epsilon"]), label=obj.get("label"))
        if kind == "difference":
            return Constraint("difference", obj["a"], obj["b"], delta=float(obj["delta"]), label=obj.get("label"))
    except KeyError as exc:
        raise InputError(f"{kind} constraint lacks field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed constraint {obj!r}: {exc}") from exc
    raise InputError(f"unknown constraint kind {kind!r}")


def load_constraints(path) -> list:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read constraints {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"constraints file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise InputError("constraints file must hold a JSON list")
    return [constraint_from_json_obj(c) for c in data]
