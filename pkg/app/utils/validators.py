"""
app/utils/validators.py

Reusable validators for exact rationals and the other scalar fields of the
instance and transcript formats
"""

import re
from fractions import Fraction
from typing import Any

_RAT_PATTERN = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rat(value: Any) -> Fraction:
    """Parse an exact rational from "7", "-3", "20/19", an int or a Fraction.

    Floats are rejected: nothing in the workbench is ever rounded.
    """
    if isinstance(value, bool):
        raise ValueError(f"Not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        match = _RAT_PATTERN.match(value)
        if not match:
            raise ValueError(f"Not a rational: {value!r} (expected \"p\" or \"p/q\")")
        numerator = int(match.group(1))
        denominator = int(match.group(2)) if match.group(2) is not None else 1
        if denominator == 0:
            raise ValueError(f"Zero denominator in {value!r}")
        return Fraction(numerator, denominator)
    raise ValueError(f"Not a rational: {value!r} (floats are not accepted)")


def is_integral(value: Fraction) -> bool:
    return value.denominator == 1
