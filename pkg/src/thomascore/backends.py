"""Arithmetic backends for the tridiagonal solvers.

A backend owns the number representation used inside a solve.  Solvers only
call ``from_real``, ``to_real``, ``add``, ``sub``, ``mul``, ``div`` and
``is_zero``, so real and fixed-point results come from the same code path.

``overflowed`` is raised by a saturating backend whenever an operation
clipped; solvers poll and clear it to record overflow events per variable.
"""
from __future__ import annotations

import math

from .fixed_point import FixedFormat, Overflow, DivideByZero, quantize, round_div, round_shift

__all__ = ["RealBackend", "FixedBackend", "DependencyCounter", "make_backend"]


class RealBackend:
    """IEEE double precision."""

    name = "real"
    overflowed = False

    def from_real(self, x):
        return float(x)

    def to_real(self, v):
        return v

    def add(self, x, y):
        return x + y

    def sub(self, x, y):
        return x - y

    def mul(self, x, y):
        return x * y

    def div(self, x, y):
        return x / y

    def is_zero(self, v):
        return v == 0.0

    def __repr__(self):
        return "RealBackend()"


class FixedBackend:
    """Fixed-point arithmetic on raw integers in a single format.

    Parameters
    ----------
    fmt : FixedFormat or str
        Target format, e.g. ``"[2,30]"``.
    overflow : {"raise", "saturate"}
        ``"raise"`` throws :class:`Overflow`; ``"saturate"`` clips to the
        format range and sets :attr:`overflowed`.
    """

    def __init__(self, fmt, overflow: str = "raise"):
        if isinstance(fmt, str):
            fmt = FixedFormat.parse(fmt)
        if overflow not in ("raise", "saturate"):
            raise ValueError(f"overflow must be 'raise' or 'saturate', got {overflow!r}")
        self.fmt = fmt
        self.overflow = overflow
        self.name = f"fixed{fmt}"
        self.overflowed = False
        self._f = fmt.fractional_bits
        self._lo = fmt.min_raw
        self._hi = fmt.max_raw
        self._saturate = overflow == "saturate"

    def _clip(self, raw, exact):
        if self._saturate:
            self.overflowed = True
            return self._hi if raw > self._hi else self._lo
        raise Overflow(exact, self.fmt)

    def from_real(self, x):
        try:
            return quantize(x, self.fmt)
        except Overflow:
            if not self._saturate:
                raise
            self.overflowed = True
            return quantize(x, self.fmt, saturate=True)

    def to_real(self, v):
        return math.ldexp(v, -self._f)

    def add(self, x, y):
        r = x + y
        if self._lo <= r <= self._hi:
            return r
        return self._clip(r, self.to_real(x) + self.to_real(y))

    def sub(self, x, y):
        r = x - y
        if self._lo <= r <= self._hi:
            return r
        return self._clip(r, self.to_real(x) - self.to_real(y))

    def mul(self, x, y):
        r = round_shift(x * y, self._f)
        if self._lo <= r <= self._hi:
            return r
        return self._clip(r, self.to_real(x) * self.to_real(y))

    def div(self, x, y):
        if y == 0:
            raise DivideByZero("fixed-point division by zero")
        r = round_div(x << self._f, y)
        if self._lo <= r <= self._hi:
            return r
        return self._clip(r, self.to_real(x) / self.to_real(y))

    def is_zero(self, v):
        return v == 0

    def __repr__(self):
        return f"FixedBackend({self.fmt}, overflow={self.overflow!r})"


class DependencyCounter:
    """Symbolic backend: every value is its depth in the data-dependency graph.

    Inputs have depth 0 and each operation has depth ``max(operands) + 1``,
    so the depth of a result is the length of the longest serial chain of
    arithmetic operations needed to produce it.  ``counts`` tallies the total
    number of operations of each kind.
    """

    name = "dependency"
    overflowed = False

    def __init__(self):
        self.counts = {"add": 0, "sub": 0, "mul": 0, "div": 0}

    def from_real(self, x):
        return 0

    def to_real(self, v):
        return float(v)

    def _op(self, kind, x, y):
        self.counts[kind] += 1
        return max(x, y) + 1

    def add(self, x, y):
        return self._op("add", x, y)

    def sub(self, x, y):
        return self._op("sub", x, y)

    def mul(self, x, y):
        return self._op("mul", x, y)

    def div(self, x, y):
        return self._op("div", x, y)

    def is_zero(self, v):
        return False


def make_backend(kind: str = "real", fmt=None, overflow: str = "raise"):
    """Backend factory used by the CLI and experiment drivers."""
    if kind == "real":
        return RealBackend()
    if kind == "fixed":
        if fmt is None:
            raise ValueError("fixed backend needs a format")
        return FixedBackend(fmt, overflow=overflow)
    raise ValueError(f"unknown backend {kind!r}")
