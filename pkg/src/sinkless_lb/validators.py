"""Input validation utilities."""

import re
from typing import Optional, Union

from .error_handler import UsageError
from .ftransform import Tower

MAX_ALPHABET = 9

_TOWER_RE = re.compile(r"^\s*(\d+(?:\s*\^\s*\d+)+)\s*(?:([+-])\s*(\d+))?\s*$")
_SCI_RE = re.compile(r"^\s*(\d+)(?:\.(\d+))?[eE]\+?(\d+)\s*$")

# Evaluate towers exactly while they stay below this many bits.
_EXACT_BITS = 1 << 20


def validate_delta(value: Optional[int], field_name: str = "delta") -> int:
    """
    Validate a maximum degree / branching factor.

    Args:
        value: Value to validate
        field_name: Name of the field (for error messages)

    Returns:
        Validated value

    Raises:
        UsageError: If the value is missing or outside 3..9
    """
    if value is None:
        raise UsageError(f"{field_name} is required")
    if not 3 <= value <= MAX_ALPHABET:
        raise UsageError(f"{field_name} must be between 3 and {MAX_ALPHABET}, got {value}")
    return value


def validate_positive_int(value: Optional[int], field_name: str) -> int:
    """Validate a strictly positive integer."""
    if value is None:
        raise UsageError(f"{field_name} is required")
    if value < 1:
        raise UsageError(f"{field_name} must be positive, got {value}")
    return value


def validate_non_negative_int(value: Optional[int], field_name: str) -> int:
    """Validate an integer that may be zero."""
    if value is None:
        raise UsageError(f"{field_name} is required")
    if value < 0:
        raise UsageError(f"{field_name} must be non-negative, got {value}")
    return value


def validate_probability(value: float, field_name: str) -> float:
    """Validate a value in [0, 1]."""
    if not 0.0 <= value <= 1.0:
        raise UsageError(f"{field_name} must lie in [0, 1], got {value}")
    return value


def parse_n(text: str) -> Union[int, Tower]:
    """
    Parse an instance size.

    Accepts plain integers, scientific notation with an integral value
    ("1e6", "2.5e3") and right-associative towers with an optional offset
    ("3^3^4", "4^4^4^5+1"). Towers whose value fits comfortably in memory are
    evaluated; larger ones come back as a Tower. All entries below the top
    must share one base.

    Raises:
        UsageError: If the text is not a recognized number
    """
    text = text.strip()
    if re.fullmatch(r"\d+", text):
        return int(text)

    match = _SCI_RE.match(text)
    if match:
        whole, frac, exp = match.group(1), match.group(2) or "", int(match.group(3))
        if len(frac) > exp:
            raise UsageError(f"'{text}' is not an integer")
        return int(whole + frac) * 10 ** (exp - len(frac))

    match = _TOWER_RE.match(text)
    if not match:
        raise UsageError(f"cannot parse '{text}' as an integer, 1e6-style number or tower a^b^c")

    entries = [int(e) for e in re.split(r"\s*\^\s*", match.group(1))]
    offset = int(match.group(3) or 0)
    if match.group(2) == "-":
        offset = -offset

    *lower, top = entries
    base = lower[0]
    if base < 2:
        raise UsageError(f"tower base must be at least 2 in '{text}'")
    if any(e != base for e in lower):
        # Mixed bases: only exact evaluation can represent them.
        value = top
        for e in reversed(lower):
            if value > _EXACT_BITS:
                raise UsageError(f"'{text}' mixes bases and is too large to evaluate")
            value = e ** value
        return value + offset

    tower = Tower(base=base, height=len(entries), top=top, offset=offset)
    exact = tower.exact(_EXACT_BITS)
    return exact if exact is not None else tower
