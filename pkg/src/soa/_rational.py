"""Rational/float conversions shared by the JSON formats."""

from fractions import Fraction
from numbers import Rational

from .errors import InputError


def parse_number(raw):
    """Read a JSON scalar: ints and "p/q" strings stay exact, floats stay floats."""
    if isinstance(raw, bool):
        raise InputError(f"expected a number, got {raw!r}")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return raw
    if isinstance(raw, str):
        try:
            return Fraction(raw.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot read {raw!r} as a rational number") from exc
    raise InputError(f"expected a number, got {raw!r}")


def format_number(value):
    """Exact values become "p/q" (or "p"), floats stay JSON floats."""
    if isinstance(value, Rational):
        value = Fraction(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    return float(value)


def is_exact(value):
    return isinstance(value, Rational)
