"""Closed intervals with exact rational endpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .errors import AmbiguousBracket


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)
    return Fraction(str(x))


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _frac(self.lo))
        object.__setattr__(self, "hi", _frac(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x) -> RationalInterval:
        x = _frac(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __float__(self) -> float:
        return float(self.mid)

    def __contains__(self, x) -> bool:
        return self.lo <= _frac(x) <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def __add__(self, other):
        if not isinstance(other, RationalInterval):
            other = RationalInterval.point(other)
        return RationalInterval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, RationalInterval):
            other = RationalInterval.point(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, RationalInterval):
            products = (self.lo * other.lo, self.lo * other.hi,
                        self.hi * other.lo, self.hi * other.hi)
            return RationalInterval(min(products), max(products))
        c = _frac(other)
        if c >= 0:
            return RationalInterval(self.lo * c, self.hi * c)
        return RationalInterval(self.hi * c, self.lo * c)

    __rmul__ = __mul__

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return RationalInterval(Fraction(0), max(-self.lo, self.hi))

    def reciprocal(self) -> RationalInterval:
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return RationalInterval(1 / self.hi, 1 / self.lo)

    def __repr__(self):
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"


def _dist(x: Fraction) -> Fraction:
    return abs(x - round(x))


def dist_to_integers(x) -> RationalInterval:
    """Bracket ``min_p |x - p|`` over integers ``p``.

    Raises AmbiguousBracket when the input is half a unit wide or more.
    """
    if not isinstance(x, RationalInterval):
        x = RationalInterval.point(x)
    if x.width >= Fraction(1, 2):
        raise AmbiguousBracket(f"interval {x!r} too wide to locate the nearest integer")
    d_lo, d_hi = _dist(x.lo), _dist(x.hi)
    if math.floor(x.hi) >= math.ceil(x.lo):
        # contains an integer
        return RationalInterval(Fraction(0), max(d_lo, d_hi))
    half = math.floor(x.lo) + Fraction(1, 2)
    if x.lo <= half <= x.hi:
        return RationalInterval(min(d_lo, d_hi), Fraction(1, 2))
    return RationalInterval(min(d_lo, d_hi), max(d_lo, d_hi))
