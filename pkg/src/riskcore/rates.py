"""Exact rational quantities with unit tracking.

All risk figures in this package are event rates per operating hour, and
the acceptance decisions they feed are threshold comparisons between
numbers that differ by several orders of magnitude.  Floating point is the
wrong tool for that: a rate must survive serialization round trips and
arbitrary re-aggregation without drift.  Everything here is therefore kept
as :class:`fractions.Fraction`, and quantities carry their unit so that
dimensional mistakes (dividing kilometres per year by hours per day, say)
fail at construction time instead of producing a plausible wrong number.

Display is a separate concern from arithmetic: :func:`format_rate` renders
a rate to three significant figures in scientific notation for reports and
user interfaces, while documents store the exact rational string.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Union

RationalLike = Union[Fraction, int, str, float]


class UnitError(TypeError):
    """Raised when an operation mixes incompatible units."""


def as_fraction(value: RationalLike) -> Fraction:
    """Convert a user-supplied number to an exact Fraction.

    Strings may be rational ("3/8030") or decimal with optional exponent
    ("1.25e-7").  Floats are interpreted through their shortest decimal
    representation, so a JSON payload containing 0.999 means exactly
    999/1000 rather than the nearest binary float.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError(f"expected a number, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise ValueError("empty numeric string")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as a rational number")


def fraction_str(value: Fraction) -> str:
    """Serialize a Fraction losslessly ("1/8030000", "42")."""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


# ============================================================
# Units
# ============================================================

# Dimension vectors are stored as sorted (symbol, exponent) tuples so that
# equal units compare equal structurally.
_Dims = tuple[tuple[str, int], ...]


def _normalize(dims: dict[str, int]) -> _Dims:
    return tuple(sorted((sym, exp) for sym, exp in dims.items() if exp != 0))


@dataclass(frozen=True)
class Unit:
    """A product of base-unit powers, e.g. hours per year."""

    dims: _Dims = ()

    @staticmethod
    def base(symbol: str) -> "Unit":
        return Unit(((symbol, 1),))

    def __mul__(self, other: "Unit") -> "Unit":
        merged = dict(self.dims)
        for sym, exp in other.dims:
            merged[sym] = merged.get(sym, 0) + exp
        return Unit(_normalize(merged))

    def __truediv__(self, other: "Unit") -> "Unit":
        merged = dict(self.dims)
        for sym, exp in other.dims:
            merged[sym] = merged.get(sym, 0) - exp
        return Unit(_normalize(merged))

    @property
    def dimensionless(self) -> bool:
        return not self.dims

    def __str__(self) -> str:
        if not self.dims:
            return "1"
        num = [f"{s}" + (f"^{e}" if e > 1 else "") for s, e in self.dims if e > 0]
        den = [f"{s}" + (f"^{-e}" if e < -1 else "") for s, e in self.dims if e < 0]
        if not num:
            return "1/" + "/".join(den)
        text = "*".join(num)
        if den:
            text += "/" + "/".join(den)
        return text


DIMENSIONLESS = Unit()
HOUR = Unit.base("h")
DAY = Unit.base("d")
YEAR = Unit.base("yr")
KILOMETRE = Unit.base("km")

PER_HOUR = DIMENSIONLESS / HOUR
PER_YEAR = DIMENSIONLESS / YEAR
HOURS_PER_DAY = HOUR / DAY
HOURS_PER_YEAR = HOUR / YEAR
DAYS_PER_YEAR = DAY / YEAR
KM_PER_YEAR = KILOMETRE / YEAR
KM_PER_HOUR = KILOMETRE / HOUR


@dataclass(frozen=True)
class Quantity:
    """An exact rational magnitude tagged with its unit."""

    value: Fraction
    unit: Unit = DIMENSIONLESS

    @staticmethod
    def of(value: RationalLike, unit: Unit = DIMENSIONLESS) -> "Quantity":
        return Quantity(as_fraction(value), unit)

    def _require_same_unit(self, other: "Quantity", op: str) -> None:
        if self.unit != other.unit:
            raise UnitError(f"cannot {op} {self.unit} and {other.unit}")

    def __add__(self, other: "Quantity") -> "Quantity":
        self._require_same_unit(other, "add")
        return Quantity(self.value + other.value, self.unit)

    def __sub__(self, other: "Quantity") -> "Quantity":
        self._require_same_unit(other, "subtract")
        return Quantity(self.value - other.value, self.unit)

    def __mul__(self, other: "Quantity") -> "Quantity":
        return Quantity(self.value * other.value, self.unit * other.unit)

    def __truediv__(self, other: "Quantity") -> "Quantity":
        if other.value == 0:
            raise ZeroDivisionError("division by zero quantity")
        return Quantity(self.value / other.value, self.unit / other.unit)

    def __lt__(self, other: "Quantity") -> bool:
        self._require_same_unit(other, "compare")
        return self.value < other.value

    def __le__(self, other: "Quantity") -> bool:
        self._require_same_unit(other, "compare")
        return self.value <= other.value

    def in_unit(self, unit: Unit) -> Fraction:
        """Extract the magnitude, asserting the expected unit."""
        if self.unit != unit:
            raise UnitError(f"expected {unit}, got {self.unit}")
        return self.value

    def __str__(self) -> str:
        return f"{fraction_str(self.value)} {self.unit}"


# ============================================================
# Display formatting
# ============================================================

def _round_significant(value: Fraction, digits: int) -> tuple[int, int]:
    """Round |value| to `digits` significant figures.

    Returns (mantissa_digits, exponent) such that the rounded value equals
    mantissa_digits * 10**(exponent - digits + 1), with 10**(digits-1) <=
    mantissa_digits < 10**digits.  Uses round-half-away-from-zero on the
    exact rational, so display never inherits binary rounding artifacts.
    """
    if value <= 0:
        raise ValueError("internal: positive value required")
    exponent = 0
    probe = value
    while probe >= 10:
        probe /= 10
        exponent += 1
    while probe < 1:
        probe *= 10
        exponent -= 1
    scaled = value * Fraction(10) ** (digits - 1 - exponent)
    mantissa = int(scaled)
    if scaled - mantissa >= Fraction(1, 2):
        mantissa += 1
    if mantissa >= 10**digits:  # rounding carried into the next decade
        mantissa //= 10
        exponent += 1
    return mantissa, exponent


def format_rate(value: RationalLike, digits: int = 3) -> str:
    """Render a rate to `digits` significant figures, e.g. "1.25e-7".

    Exponents carry no zero padding and zero renders as "0".  Negative
    rates never occur in well-formed documents but format symmetrically
    for diagnostics.
    """
    frac = as_fraction(value)
    if frac == 0:
        return "0"
    sign = "-" if frac < 0 else ""
    mantissa, exponent = _round_significant(abs(frac), digits)
    text = str(mantissa)
    head, tail = text[0], text[1:].rstrip("0")
    mantissa_text = head if not tail else f"{head}.{tail}"
    if -1 <= exponent <= 2:  # keep small magnitudes in plain notation
        plain = Fraction(mantissa, 10 ** (digits - 1)) * Fraction(10) ** exponent
        if plain.denominator == 1:
            return f"{sign}{plain.numerator}"
        return f"{sign}{float(plain):g}"
    return f"{sign}{mantissa_text}e{exponent}"


def format_factor(value: RationalLike, digits: int = 4) -> str:
    """Render a reduction factor, e.g. "268.5"; large factors go scientific."""
    frac = as_fraction(value)
    if frac == 0:
        return "0"
    mantissa, exponent = _round_significant(abs(frac), digits)
    if exponent >= digits + 2 or exponent < -2:
        return format_rate(frac, 3)
    scaled = Fraction(mantissa, 10 ** (digits - 1 - exponent))
    if scaled.denominator == 1:
        return str(scaled.numerator)
    return f"{float(scaled):g}"
