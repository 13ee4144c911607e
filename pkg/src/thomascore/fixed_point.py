"""Bit-exact emulation of signed two's-complement fixed-point arithmetic.

A value in format ``[i,f]`` is stored as an integer ``raw`` with
``value = raw * 2**-f``.  The sign bit is counted inside the ``i`` integer
bits, so ``[2,30]`` covers ``[-2, 2 - 2**-30]`` in a 32-bit word.

All roundings are round-to-nearest, ties to even.  Overflow raises
:class:`Overflow` unless saturation is requested explicitly.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

__all__ = [
    "FixedPointError",
    "Overflow",
    "DivideByZero",
    "FixedFormat",
    "FixedValue",
    "from_real",
    "to_real",
    "add",
    "sub",
    "mul",
    "div",
    "expected_rounding_error",
    "round_shift",
    "round_div",
]


class FixedPointError(ArithmeticError):
    pass


class Overflow(FixedPointError):
    """A value does not fit in the target format."""

    def __init__(self, value, fmt: "FixedFormat"):
        self.value = value
        self.fmt = fmt
        # filled in by the solvers when the overflow happens inside a recurrence
        self.row: int | None = None
        self.variable: str | None = None
        super().__init__(f"{value!r} outside range of {fmt} "
                         f"[{fmt.min_value}, {fmt.max_value}]")

    def __str__(self):
        msg = super().__str__()
        if self.row is not None:
            msg += f" (row {self.row}, variable {self.variable})"
        return msg


class DivideByZero(FixedPointError, ZeroDivisionError):
    pass


_FORMAT_RE = re.compile(r"^\s*\[?\s*(-?\d+)\s*,\s*(-?\d+)\s*\]?\s*$")


@dataclass(frozen=True)
class FixedFormat:
    """Two's-complement Q-format ``[integer_bits, fractional_bits]``."""

    integer_bits: int
    fractional_bits: int

    def __post_init__(self):
        if self.integer_bits < 1 or self.fractional_bits < 1:
            raise ValueError(
                f"integer_bits and fractional_bits must be >= 1, "
                f"got [{self.integer_bits},{self.fractional_bits}]")

    @classmethod
    def parse(cls, text: str) -> "FixedFormat":
        """Parse ``"[i,f]"`` (brackets optional)."""
        m = _FORMAT_RE.match(text)
        if m is None:
            raise ValueError(f"cannot parse fixed-point format {text!r}, expected '[i,f]'")
        return cls(int(m.group(1)), int(m.group(2)))

    @property
    def width(self) -> int:
        return self.integer_bits + self.fractional_bits

    @property
    def min_raw(self) -> int:
        return -(1 << (self.width - 1))

    @property
    def max_raw(self) -> int:
        return (1 << (self.width - 1)) - 1

    @property
    def ulp(self) -> float:
        return math.ldexp(1.0, -self.fractional_bits)

    @property
    def min_value(self) -> float:
        return -math.ldexp(1.0, self.integer_bits - 1)

    @property
    def max_value(self) -> float:
        return math.ldexp(1.0, self.integer_bits - 1) - self.ulp

    def fits(self, raw: int) -> bool:
        return self.min_raw <= raw <= self.max_raw

    def __str__(self):
        return f"[{self.integer_bits},{self.fractional_bits}]"


# -- raw integer kernels ------------------------------------------------------

def round_shift(value: int, shift: int) -> int:
    """``value * 2**-shift`` rounded to nearest, ties to even."""
    if shift <= 0:
        return value << -shift
    q = value >> shift
    rem = value - (q << shift)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and q & 1):
        q += 1
    return q


def round_div(num: int, den: int) -> int:
    """``num / den`` rounded to nearest, ties to even."""
    if den < 0:
        num, den = -num, -den
    q, rem = divmod(num, den)
    twice = 2 * rem
    if twice > den or (twice == den and q & 1):
        q += 1
    return q


def _fit(raw: int, fmt: FixedFormat, saturate: bool, exact) -> int:
    if raw > fmt.max_raw:
        if saturate:
            return fmt.max_raw
        raise Overflow(exact, fmt)
    if raw < fmt.min_raw:
        if saturate:
            return fmt.min_raw
        raise Overflow(exact, fmt)
    return raw


def quantize(x, fmt: FixedFormat, saturate: bool = False) -> int:
    """Raw integer nearest to the real ``x`` (float, int or Fraction)."""
    if isinstance(x, float) and not math.isfinite(x):
        if saturate and not math.isnan(x):
            return fmt.max_raw if x > 0 else fmt.min_raw
        raise Overflow(x, fmt)
    if isinstance(x, float):
        # scaling a float by a power of two is exact; round() on the product is RNE
        raw = round(math.ldexp(x, fmt.fractional_bits))
    else:
        raw = round(Fraction(x) * (1 << fmt.fractional_bits))
    return _fit(raw, fmt, saturate, x)


# -- value type ---------------------------------------------------------------

@dataclass(frozen=True)
class FixedValue:
    raw: int
    fmt: FixedFormat

    def __post_init__(self):
        if not self.fmt.fits(self.raw):
            raise Overflow(Fraction(self.raw, 1 << self.fmt.fractional_bits), self.fmt)

    def to_real(self) -> float:
        return math.ldexp(self.raw, -self.fmt.fractional_bits)

    def to_fraction(self) -> Fraction:
        return Fraction(self.raw, 1 << self.fmt.fractional_bits)

    def __float__(self):
        return self.to_real()

    def __neg__(self):
        return FixedValue(_fit(-self.raw, self.fmt, False, -self.to_fraction()), self.fmt)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __repr__(self):
        return f"FixedValue({self.to_real()!r}, {self.fmt})"


def from_real(x: Real, fmt: FixedFormat, saturate: bool = False) -> FixedValue:
    """Nearest representable value to ``x`` in ``fmt`` (ties to even)."""
    return FixedValue(quantize(x, fmt, saturate), fmt)


def to_real(v: FixedValue) -> float:
    return v.to_real()


def _common_format(lhs: FixedValue, rhs: FixedValue) -> FixedFormat:
    if lhs.fmt != rhs.fmt:
        raise ValueError(f"format mismatch: {lhs.fmt} vs {rhs.fmt}")
    return lhs.fmt


def add(lhs: FixedValue, rhs: FixedValue, saturate: bool = False) -> FixedValue:
    fmt = _common_format(lhs, rhs)
    raw = lhs.raw + rhs.raw
    return FixedValue(_fit(raw, fmt, saturate, lhs.to_fraction() + rhs.to_fraction()), fmt)


def sub(lhs: FixedValue, rhs: FixedValue, saturate: bool = False) -> FixedValue:
    fmt = _common_format(lhs, rhs)
    raw = lhs.raw - rhs.raw
    return FixedValue(_fit(raw, fmt, saturate, lhs.to_fraction() - rhs.to_fraction()), fmt)


def mul(lhs: FixedValue, rhs: FixedValue, saturate: bool = False) -> FixedValue:
    """Product of the double-width integer product, rounded back to ``f`` bits."""
    fmt = _common_format(lhs, rhs)
    raw = round_shift(lhs.raw * rhs.raw, fmt.fractional_bits)
    return FixedValue(_fit(raw, fmt, saturate, lhs.to_fraction() * rhs.to_fraction()), fmt)


def div(lhs: FixedValue, rhs: FixedValue, saturate: bool = False) -> FixedValue:
    """Exact quotient rounded to the nearest representable value."""
    fmt = _common_format(lhs, rhs)
    if rhs.raw == 0:
        raise DivideByZero(f"division of {lhs!r} by zero")
    raw = round_div(lhs.raw << fmt.fractional_bits, rhs.raw)
    return FixedValue(_fit(raw, fmt, saturate, lhs.to_fraction() / rhs.to_fraction()), fmt)


def expected_rounding_error(fractional_bits: int) -> float:
    """Mean absolute error of rounding a uniformly distributed real to ``f`` bits.

    Rounding error is uniform on ``[-ulp/2, ulp/2]``, so its mean magnitude is
    ``ulp/4 = 2**-(f+2)``.  (The closed form is sometimes printed as
    ``2**(f-1)/2``; that exponent has the wrong sign.)
    """
    if fractional_bits < 1:
        raise ValueError("fractional_bits must be >= 1")
    return math.ldexp(1.0, -fractional_bits - 2)
