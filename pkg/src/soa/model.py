"""Decision models given as analytic expressions.

Grammar (lowest to highest precedence)::

    expr     := or_expr
    or_expr  := and_expr { "or" and_expr }
    and_expr := not_expr { "and" not_expr }
    not_expr := [ "not" ] cmp
    cmp      := sum [ ("<" | "<=" | ">" | ">=" | "=") sum ]
    sum      := term { ("+" | "-") term }
    term     := pow { ("*" | "/") pow }
    pow      := unary [ "^" integer ]
    unary    := [ "-" ] atom
    atom     := number | ident | ident "(" args ")" | "(" expr ")"

Note that ``-x1^2`` therefore means ``(-x1)^2``.  Booleans are the numbers
0 and 1; any nonzero value counts as true.  ``and``, ``or`` and ``if`` only
evaluate the operand they need.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import EvaluationError, InputError, ParseError
from .game import MAX_PLAYERS, Game
from .transform import Discrete, DistributionSpec

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "abs": 1, "if": 3}
KEYWORDS = {"and", "or", "not"}
COMPARISONS = ("<", "<=", ">", ">=", "=")
IRRATIONAL = {"sin", "cos", "exp"}
MAX_OUTCOMES = 1 << 24
MAX_ENUMERATION_WORK = 1 << 26


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: Fraction
    text: str = field(default="", compare=False)
    parens: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Var:
    index: int
    name: str = field(default="", compare=False)
    parens: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Neg:
    arg: object
    parens: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Not:
    arg: object
    parens: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    parens: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    parens: bool = field(default=False, compare=False)


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    parens: bool = field(default=False, compare=False)


_PRECEDENCE = {"or": 1, "and": 2, **{c: 4 for c in COMPARISONS}, "+": 5, "-": 5, "*": 6, "/": 6}


def _prec(node) -> int:
    if isinstance(node, BinOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Not):
        return 3
    if isinstance(node, Pow):
        return 7
    if isinstance(node, Neg):
        return 8
    return 9


def variables(node) -> set:
    """Indices of the inputs an expression reads."""
    if isinstance(node, Var):
        return {node.index}
    out = set()
    for child in _children(node):
        out |= variables(child)
    return out


def _children(node):
    if isinstance(node, (Neg, Not)):
        return (node.arg,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Pow):
        return (node.base,)
    if isinstance(node, Call):
        return node.args
    return ()


def _uses(node, names) -> bool:
    if isinstance(node, Call) and node.name in names:
        return True
    return any(_uses(c, names) for c in _children(node))


# --------------------------------------------------------------------------
# tokenizer and parser

_TOKEN = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|[<>=+\-*/^(),])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number, ident, op, end
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        lexeme = m.group()
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - lexeme.rfind("\n")
        else:
            col += len(lexeme)
        pos = m.end()
    tokens.append(_Token("end", "", line, col))
    return tokens


_ATOM_START = ("number", "identifier", "(")


class _Parser:
    def __init__(self, text: str, names: dict, d: int | None):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.names = names
        self.d = d

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def _is(self, *texts) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def _advance(self) -> _Token:
        t = self.tok
        self.pos += 1
        return t

    def _fail(self, message, expected, tok=None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.column, expected)

    def _expect(self, text, expected=None):
        if not self._is(text):
            found = self.tok.text or "end of input"
            self._fail(f"unexpected {found!r}", expected or (text,))
        return self._advance()

    def parse(self):
        if self.tok.kind == "end":
            self._fail("empty expression", _ATOM_START + ("-", "not"))
        node = self.or_expr()
        if self.tok.kind != "end":
            self._fail(f"unexpected {self.tok.text!r}", ("and", "or", "end of input") + COMPARISONS
                       + ("+", "-", "*", "/", "^"))
        return node

    def or_expr(self):
        node = self.and_expr()
        while self._is("or"):
            self._advance()
            node = BinOp("or", node, self.and_expr())
        return node

    def and_expr(self):
        node = self.not_expr()
        while self._is("and"):
            self._advance()
            node = BinOp("and", node, self.not_expr())
        return node

    def not_expr(self):
        if self._is("not"):
            self._advance()
            return Not(self.cmp())
        return self.cmp()

    def cmp(self):
        node = self.sum()
        if self._is(*COMPARISONS):
            op = self._advance().text
            node = BinOp(op, node, self.sum())
        return node

    def sum(self):
        node = self.term()
        while self._is("+", "-"):
            op = self._advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.pow()
        while self._is("*", "/"):
            op = self._advance().text
            node = BinOp(op, node, self.pow())
        return node

    def pow(self):
        node = self.unary()
        if self._is("^"):
            self._advance()
            t = self.tok
            if t.kind != "number" or not t.text.isdigit():
                self._fail(f"exponent must be a non-negative integer literal, got {t.text or 'end of input'!r}",
                           ("integer",))
            self._advance()
            node = Pow(node, int(t.text))
        return node

    def unary(self):
        if self._is("-"):
            self._advance()
            return Neg(self.atom(after_minus=True))
        return self.atom()

    def atom(self, after_minus=False):
        t = self.tok
        if t.kind == "number":
            self._advance()
            return Num(Fraction(t.text), t.text)
        if self._is("("):
            self._advance()
            node = self.or_expr()
            self._expect(")", (")", "and", "or", "+", "-", "*", "/", "^") + COMPARISONS)
            return replace(node, parens=True)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self._advance()
            if self._is("("):
                return self._call(t)
            return self._variable(t)
        found = t.text or "end of input"
        self._fail(f"unexpected {found!r}", _ATOM_START if after_minus else _ATOM_START + ("-",))

    def _call(self, name_tok):
        name = name_tok.text
        if name not in FUNCTIONS:
            self._fail(f"unknown function {name!r}", tuple(FUNCTIONS), name_tok)
        self._advance()
        args = [self.or_expr()]
        while self._is(","):
            self._advance()
            args.append(self.or_expr())
        self._expect(")", (",", ")"))
        if len(args) != FUNCTIONS[name]:
            self._fail(f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                       (f"{FUNCTIONS[name]} argument(s)",), name_tok)
        return Call(name, tuple(args))

    def _variable(self, tok):
        name = tok.text
        if name in FUNCTIONS:
            self._fail(f"function {name!r} needs arguments", ("(",))
        if name in self.names:
            return Var(self.names[name], name)
        m = re.fullmatch(r"x([1-9]\d*)", name)
        if m is None:
            known = sorted(self.names) + [f"x1..x{self.d}" if self.d else "x<k>"]
            self._fail(f"unknown identifier {name!r}", known, tok)
        index = int(m.group(1))
        if self.d is not None and index > self.d:
            self._fail(f"input {name} exceeds dimension d={self.d}", [f"x1..x{self.d}"], tok)
        return Var(index, name)


def parse(text: str, d: int | None = None, inputs=None):
    """Parse an expression into an AST.

    ``inputs`` optionally names the inputs in order; ``x1 .. xd`` are always
    accepted.  With ``d`` given, indices above ``d`` are rejected.
    """
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty expression", 1, 1, _ATOM_START)
    names = {}
    if inputs is not None:
        inputs = list(inputs)
        if d is not None and len(inputs) != d:
            raise InputError(f"{len(inputs)} input names for d={d}")
        for k, name in enumerate(inputs, start=1):
            if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name) or name in KEYWORDS or name in FUNCTIONS:
                raise InputError(f"invalid input name {name!r}")
            if name in names:
                raise InputError(f"duplicate input name {name!r}")
            names[name] = k
        d = len(inputs) if d is None else d
    return _Parser(text, names, d).parse()


# --------------------------------------------------------------------------
# printing


def pretty(node) -> str:
    """Render an AST as source text.

    Parentheses written in the source are kept; others are inserted only
    where precedence requires them, so ``parse(pretty(t)) == t``.
    """
    return _render(node, 0, False)


def _wrap(text: str, node, need: bool) -> str:
    return f"({text})" if need or node.parens else text


def _render(node, min_prec: int, strict: bool) -> str:
    p = _prec(node)
    need = p < min_prec or (strict and p == min_prec)
    if isinstance(node, Num):
        return _wrap(node.text or _num_text(node.value), node, need)
    if isinstance(node, Var):
        return _wrap(node.name or f"x{node.index}", node, need)
    if isinstance(node, Neg):
        return _wrap("-" + _render(node.arg, 9, False), node, need)
    if isinstance(node, Not):
        return _wrap("not " + _render(node.arg, 4, False), node, need)
    if isinstance(node, Pow):
        return _wrap(f"{_render(node.base, 8, False)}^{node.exponent}", node, need)
    if isinstance(node, Call):
        args = ", ".join(_render(a, 0, False) for a in node.args)
        return _wrap(f"{node.name}({args})", node, need)
    if isinstance(node, BinOp):
        if p == 4:
            left, right = _render(node.left, 5, False), _render(node.right, 5, False)
        else:
            left, right = _render(node.left, p, False), _render(node.right, p, True)
        return _wrap(f"{left} {node.op} {right}", node, need)
    raise TypeError(f"not an expression node: {node!r}")


def _num_text(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"({value.numerator}/{value.denominator})"


# --------------------------------------------------------------------------
# evaluation


def _truth(v) -> bool:
    return v != 0


def _evaluate(node, x, exact: bool):
    if isinstance(node, Num):
        return node.value if exact else float(node.value)
    if isinstance(node, Var):
        return x[node.index - 1]
    if isinstance(node, Neg):
        return -_evaluate(node.arg, x, exact)
    if isinstance(node, Not):
        return int(not _truth(_evaluate(node.arg, x, exact)))
    if isinstance(node, Pow):
        base = _evaluate(node.base, x, exact)
        return base ** node.exponent
    if isinstance(node, Call):
        return _call(node, x, exact)
    op = node.op
    if op == "and":
        return int(_truth(_evaluate(node.left, x, exact)) and _truth(_evaluate(node.right, x, exact)))
    if op == "or":
        return int(_truth(_evaluate(node.left, x, exact)) or _truth(_evaluate(node.right, x, exact)))
    a, b = _evaluate(node.left, x, exact), _evaluate(node.right, x, exact)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise EvaluationError(f"division by zero in {pretty(node)!r} at x={_show(x)}")
        return a / b
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    return int(a == b)


def _call(node, x, exact):
    name = node.name
    if name == "if":
        cond = _evaluate(node.args[0], x, exact)
        return _evaluate(node.args[1] if _truth(cond) else node.args[2], x, exact)
    v = _evaluate(node.args[0], x, exact)
    if name == "abs":
        return abs(v)
    if exact:
        raise EvaluationError(f"{name} has no exact rational evaluation")
    try:
        return {"sin": math.sin, "cos": math.cos, "exp": math.exp}[name](v)
    except OverflowError:
        raise EvaluationError(f"{name} overflows at x={_show(x)}") from None


def _show(x) -> str:
    return "(" + ", ".join(str(v) for v in x) + ")"


def evaluate(node, x) -> float:
    """Floating-point value of ``node`` at the point ``x`` (1-based inputs)."""
    x = tuple(float(v) for v in x)
    _check_dim(node, len(x))
    return float(_evaluate(node, x, False))


def evaluate_exact(node, x) -> Fraction:
    """Exact rational value; ``sin``, ``cos`` and ``exp`` are rejected."""
    xs = []
    for v in x:
        if isinstance(v, float):
            v = Fraction(v)
        elif not isinstance(v, (int, Fraction)):
            raise EvaluationError(f"exact evaluation needs rational inputs, got {v!r}")
        xs.append(Fraction(v))
    _check_dim(node, len(xs))
    return Fraction(_evaluate(node, tuple(xs), True))


def _check_dim(node, d):
    used = variables(node)
    if used and max(used) > d:
        raise InputError(f"expression reads x{max(used)} but the point has dimension {d}")


def _batch(node, X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    if isinstance(node, Num):
        return np.full(n, float(node.value))
    if isinstance(node, Var):
        return X[:, node.index - 1].astype(float)
    if isinstance(node, Neg):
        return -_batch(node.arg, X)
    if isinstance(node, Not):
        return (_batch(node.arg, X) == 0).astype(float)
    if isinstance(node, Pow):
        return _batch(node.base, X) ** node.exponent
    if isinstance(node, Call):
        if node.name == "if":
            return _lazy(X, _batch(node.args[0], X) != 0, node.args[1], node.args[2])
        v = _batch(node.args[0], X)
        if node.name == "abs":
            return np.abs(v)
        with np.errstate(over="ignore"):
            out = {"sin": np.sin, "cos": np.cos, "exp": np.exp}[node.name](v)
        bad = ~np.isfinite(out) & np.isfinite(v)
        if bad.any():
            raise EvaluationError(f"{node.name} overflows at x={_show(X[np.argmax(bad)])}")
        return out
    op = node.op
    if op in ("and", "or"):
        left = _batch(node.left, X) != 0
        need = left if op == "and" else ~left
        out = left.astype(float)
        if need.any():
            out[need] = (_batch(node.right, X[need]) != 0).astype(float)
        return out
    a, b = _batch(node.left, X), _batch(node.right, X)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        zero = b == 0
        if zero.any():
            raise EvaluationError(f"division by zero in {pretty(node)!r} at x={_show(X[np.argmax(zero)])}")
        return a / b
    cmp = {"<": np.less, "<=": np.less_equal, ">": np.greater, ">=": np.greater_equal, "=": np.equal}[op]
    return cmp(a, b).astype(float)


def _lazy(X, cond, a, b):
    out = np.empty(X.shape[0])
    if cond.any():
        out[cond] = _batch(a, X[cond])
    if (~cond).any():
        out[~cond] = _batch(b, X[~cond])
    return out


def evaluate_batch(node, X) -> np.ndarray:
    """Vectorized evaluation over the rows of ``X`` (shape (n, d))."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_dim(node, X.shape[1])
    return _batch(node, X)


class Model:
    """A parsed expression bound to a dimension; callable on points."""

    def __init__(self, ast, d: int, inputs=None, source: str | None = None):
        used = variables(ast)
        if used and max(used) > d:
            raise InputError(f"expression reads x{max(used)} but d={d}")
        self.ast = ast
        self.d = d
        self.inputs = tuple(inputs) if inputs is not None else tuple(f"x{k}" for k in range(1, d + 1))
        self.source = source if source is not None else pretty(ast)

    @classmethod
    def parse(cls, text: str, d: int | None = None, inputs=None) -> "Model":
        ast = parse(text, d=d, inputs=inputs)
        if d is None:
            d = len(inputs) if inputs is not None else max(variables(ast), default=1)
        return cls(ast, d, inputs, text)

    def __call__(self, x) -> float:
        return evaluate(self.ast, x)

    def evaluate_batch(self, X) -> np.ndarray:
        return evaluate_batch(self.ast, X)

    def evaluate_exact(self, x) -> Fraction:
        return evaluate_exact(self.ast, x)

    @property
    def is_rational(self) -> bool:
        return not _uses(self.ast, IRRATIONAL)

    def pretty(self) -> str:
        return pretty(self.ast)

    def __repr__(self):
        return f"Model({self.source!r}, d={self.d})"


# --------------------------------------------------------------------------
# discrete distributions and exact games


def _exact(v, what):
    if isinstance(v, bool):
        raise InputError(f"{what} must be numeric, got {v!r}")
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float):
        # decimal reading: a JSON 0.1 means 1/10
        return Fraction(repr(v))
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot read {what} {v!r} as a rational") from exc
    raise InputError(f"{what} must be numeric, got {v!r}")


@dataclass(frozen=True)
class JointPmf:
    """Finite joint distribution given as a table of (point, probability) rows."""

    points: tuple
    probs: tuple

    def __post_init__(self):
        if not self.points or len(self.points) != len(self.probs):
            raise InputError("joint pmf needs matching, nonempty points and probabilities")
        dims = {len(p) for p in self.points}
        if len(dims) != 1:
            raise InputError("joint pmf points have different dimensions")
        if any(p < 0 for p in self.probs):
            raise InputError("negative probability in joint pmf")
        if sum(self.probs) != 1:
            raise InputError(f"joint pmf probabilities sum to {sum(self.probs)}, not 1")
        if len(set(self.points)) != len(self.points):
            raise InputError("joint pmf lists a point twice")

    @property
    def d(self) -> int:
        return len(self.points[0])

    @classmethod
    def from_json_obj(cls, rows) -> "JointPmf":
        try:
            points = tuple(tuple(_exact(v, "joint pmf value") for v in r["x"]) for r in rows)
            probs = tuple(_exact(r["p"], "joint pmf probability") for r in rows)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed joint pmf row: {exc}") from exc
        return cls(points, probs)

    def to_json_obj(self) -> list:
        from ._rational import format_number

        return [{"x": [format_number(v) for v in x], "p": format_number(p)} for x, p in zip(self.points, self.probs)]

    @classmethod
    def product(cls, marginals) -> "JointPmf":
        count = 1
        for m in marginals:
            if not isinstance(m, Discrete):
                raise InputError("exact enumeration needs finite discrete marginals only")
            count *= len(m.values)
            if count > MAX_OUTCOMES:
                raise InputError(f"joint outcome count exceeds {MAX_OUTCOMES}")
        per_dim = []
        for k, m in enumerate(marginals, start=1):
            vals = [_exact(v, f"value of input {k}") for v in m.values]
            probs = [_exact(p, f"probability of input {k}") for p in m.probs]
            if sum(probs) != 1:
                raise InputError(f"probabilities of input {k} sum to {sum(probs)}, not exactly 1")
            per_dim.append(list(zip(vals, probs)))
        points, probs = [], []
        for combo in itertools.product(*per_dim):
            p = math.prod((c[1] for c in combo), start=Fraction(1))
            if p:
                points.append(tuple(c[0] for c in combo))
                probs.append(p)
        return cls(tuple(points), tuple(probs))


@dataclass(frozen=True)
class DiscreteGameResult:
    game: Game
    mean: Fraction
    variance: Fraction
    expected_residual: tuple | None = None  # E[Var(Y | X_u)] per coalition mask


def exact_game(model, dist=None, *, with_residuals: bool = False) -> DiscreteGameResult:
    """Relative-importance game ``val(u) = Var(E[Y | X_u])`` by exact enumeration.

    ``model`` is a :class:`Model` (or an AST); ``dist`` is a
    :class:`DistributionSpec` with discrete marginals or a :class:`JointPmf`.
    """
    if not isinstance(model, Model):
        used = variables(model)
        model = Model(model, max(used, default=1))
    if isinstance(dist, DistributionSpec):
        if not dist.is_discrete:
            raise InputError("exact enumeration needs finite discrete marginals only")
        # refuse oversized enumerations before materializing the product
        count = math.prod(len(m.values) for m in dist.marginals)
        if count * (1 << dist.d) > MAX_ENUMERATION_WORK:
            raise InputError(
                f"enumeration of {count} outcomes over {1 << dist.d} coalitions exceeds the work limit"
            )
        joint = JointPmf.product(dist.marginals)
    elif isinstance(dist, JointPmf):
        joint = dist
    else:
        raise InputError("exact_game needs a discrete DistributionSpec or a JointPmf")
    d = joint.d
    if d != model.d:
        raise InputError(f"model has d={model.d} but the distribution has d={d}")
    if d > MAX_PLAYERS:
        raise InputError(f"at most {MAX_PLAYERS} inputs")
    n = len(joint.points)
    if n > MAX_OUTCOMES:
        raise InputError(f"joint outcome count {n} exceeds {MAX_OUTCOMES}")
    if n * (1 << d) > MAX_ENUMERATION_WORK:
        raise InputError(f"enumeration of {n} outcomes over {1 << d} coalitions exceeds the work limit")
    if not model.is_rational:
        raise InputError("exact enumeration rejects sin, cos and exp (no exact rational value)")

    ys = [model.evaluate_exact(x) for x in joint.points]
    probs = joint.probs
    mean = sum((p * y for p, y in zip(probs, ys)), Fraction(0))
    second = sum((p * y * y for p, y in zip(probs, ys)), Fraction(0))
    values = [Fraction(0)] * (1 << d)
    residual = [None] * (1 << d) if with_residuals else None
    for mask in range(1 << d):
        idx = [i for i in range(d) if mask >> i & 1]
        groups: dict = {}
        for x, p, y in zip(joint.points, probs, ys):
            key = tuple(x[i] for i in idx)
            acc = groups.setdefault(key, [Fraction(0), Fraction(0)])
            acc[0] += p
            acc[1] += p * y
        cond_second = sum((py * py / pm for pm, py in groups.values() if pm), Fraction(0))
        values[mask] = cond_second - mean * mean
        if with_residuals:
            cond_mean = {k: (py / pm if pm else Fraction(0)) for k, (pm, py) in groups.items()}
            residual[mask] = sum(
                (p * (y - cond_mean[tuple(x[i] for i in idx)]) ** 2 for x, p, y in zip(joint.points, probs, ys)),
                Fraction(0),
            )
    values[0] = Fraction(0)
    variance = second - mean * mean
    return DiscreteGameResult(Game(d, values), mean, variance, tuple(residual) if with_residuals else None)


# --------------------------------------------------------------------------
# model files


@dataclass(frozen=True)
class ModelFile:
    model: Model
    distribution: DistributionSpec | None
    joint: JointPmf | None
    digest: str

    @property
    def is_discrete(self) -> bool:
        return self.joint is not None or (self.distribution is not None and self.distribution.is_discrete)

    def discrete_distribution(self):
        return self.joint if self.joint is not None else self.distribution


def model_digest(obj) -> str:
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def model_from_json_obj(obj) -> ModelFile:
    if not isinstance(obj, dict):
        raise InputError("model file must hold a JSON object")
    for key in ("d", "expression", "distribution"):
        if key not in obj:
            raise InputError(f"model file lacks {key!r}")
    d = obj["d"]
    if not isinstance(d, int) or isinstance(d, bool) or not 1 <= d <= MAX_PLAYERS:
        raise InputError(f"d must be an integer in [1, {MAX_PLAYERS}], got {d!r}")
    model = Model.parse(obj["expression"], d=d, inputs=obj.get("inputs"))
    dist_obj = obj["distribution"]
    distribution = joint = None
    if isinstance(dist_obj, dict) and "joint_pmf" in dist_obj:
        joint = JointPmf.from_json_obj(dist_obj["joint_pmf"])
        if joint.d != d:
            raise InputError(f"joint pmf has dimension {joint.d}, model has d={d}")
    else:
        distribution = DistributionSpec.from_json_obj(dist_obj)
        if distribution.d != d:
            raise InputError(f"distribution has dimension {distribution.d}, model has d={d}")
    return ModelFile(model, distribution, joint, model_digest(obj))


def load_model_file(path) -> ModelFile:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"model file {path} is not valid JSON: {exc}") from exc
    return model_from_json_obj(obj)
