"""
Exact rational helpers shared by every pipeline stage.

All costs, times, duals and budgets are ``fractions.Fraction`` values. This module
converts between fractions and their textual forms ("p/q", decimal literals) and
provides the pydantic ``Rational`` annotation used by the domain models.
"""
import re
from fractions import Fraction
from typing import Annotated, Any, Dict, Final

from pydantic import BeforeValidator, PlainSerializer

# Integer, fraction "p/q", or decimal with optional exponent. No nan/inf.
_RATIONAL_PATTERN: Final[re.Pattern[str]] = re.compile(
    r"^[+-]?(\d+/\d+|\d+(\.\d*)?([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?)$"
)

APPROX_DIGITS: Final[int] = 12


def parse_rational(value: Any) -> Fraction:
    """
    Convert a literal into an exact Fraction.

    Decimal literals are converted exactly (``"0.0083"`` becomes ``83/10000``);
    floats are rejected unless they are integral, because their binary expansion
    is not what the user wrote.

    Args:
        value: Fraction, int, integral float, or string ("p/q" or decimal)

    Returns:
        The exact Fraction in lowest terms

    Raises:
        ValueError: If the literal is malformed or has a zero denominator

    Example:
        >>> parse_rational("83/10000") == parse_rational("0.0083")
        True
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError(f"Not a rational literal: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if value.is_integer():
            return Fraction(int(value))
        raise ValueError(f"Float {value!r} is inexact; write it as a decimal string or p/q")
    if isinstance(value, str):
        text = value.strip()
        if not _RATIONAL_PATTERN.match(text):
            raise ValueError(f"Not a rational literal: {value!r}")
        try:
            return Fraction(text)
        except ZeroDivisionError:
            raise ValueError(f"Zero denominator in {value!r}")
    raise ValueError(f"Not a rational literal: {value!r}")


def format_rational(value: Fraction) -> str:
    """Format a Fraction in lowest terms ("3", "1/2")."""
    return str(Fraction(value))


def approx(value: Fraction) -> str:
    """Decimal approximation with 12 significant digits, for human readers only."""
    return format(float(value), f".{APPROX_DIGITS}g")


def rational_entry(value: Fraction) -> Dict[str, str]:
    """
    Machine-output form of a rational: exact value with an approximate sibling.

    Example:
        >>> rational_entry(Fraction(1, 3))
        {'exact': '1/3', 'approx': '0.333333333333'}
    """
    return {"exact": format_rational(value), "approx": approx(value)}


Rational = Annotated[
    Fraction,
    BeforeValidator(parse_rational),
    PlainSerializer(format_rational, return_type=str, when_used="json"),
]


# Report fields: exact "p/q" with a 12-digit decimal sibling in JSON output.
DisplayRational = Annotated[
    Fraction,
    BeforeValidator(parse_rational),
    PlainSerializer(rational_entry, when_used="json"),
]
