"""Exact rational helpers shared by every module.

All numeric data in the package is carried as :class:`fractions.Fraction`.
Floats are rejected on input so that nothing silently loses precision.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Union

RationalLike = Union[Fraction, int, str]

__all__ = ["Fraction", "RationalLike", "as_fraction", "format_fraction", "parse_fraction"]


def parse_fraction(text: str) -> Fraction:
    """Parse ``"p/q"`` or an integer string into a Fraction.

    Decimal notation is refused on purpose.
    """
    s = text.strip()
    if not s or any(c in s for c in ".eE"):
        raise ValueError(f"not a rational literal: {text!r}")
    num, sep, den = s.partition("/")
    try:
        p = int(num)
        q = int(den) if sep else 1
    except ValueError:
        raise ValueError(f"not a rational literal: {text!r}") from None
    if q <= 0:
        raise ValueError(f"denominator must be positive: {text!r}")
    return Fraction(p, q)


def as_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return parse_fraction(value)
    if isinstance(value, Rational):
        return Fraction(value.numerator, value.denominator)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_fraction(value: Fraction) -> str:
    """Serialize as ``"p/q"`` with ``q > 0`` and ``gcd(p, q) = 1`` (always with a slash)."""
    v = as_fraction(value)
    return f"{v.numerator}/{v.denominator}"
