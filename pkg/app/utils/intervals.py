"""Midpoint-radius ("ball") arithmetic over mpmath numbers.

An ErrorInterval is the closed disc (or, for real centers, the real interval)
of points within ``radius`` of ``center``. Every operation returns a ball that
contains every possible result of the operation on members of its inputs; after
each operation the radius is padded by a few units in the last place of the
current mpmath precision to absorb the rounding of the center itself.
"""

from fractions import Fraction
from typing import Union

import mpmath
from mpmath import mp, mpc, mpf

Number = Union[int, float, Fraction, mpf, mpc]


def _to_mp(value: Number):
    if isinstance(value, Fraction):
        return mpf(value.numerator) / value.denominator
    if isinstance(value, (mpf, mpc)):
        return value
    if isinstance(value, complex):
        return mpc(value)
    return mpf(value)


def _ulps(magnitude) -> mpf:
    """A few units in the last place of ``magnitude`` at the working precision."""
    return abs(magnitude) * mpf(2) ** (4 - mp.prec) + mpf(2) ** (-10 * mp.prec)


class ErrorInterval:
    """A value together with a certified bound on its absolute error."""

    __slots__ = ("center", "radius")

    def __init__(self, center: Number, radius: Number = 0):
        self.center = _to_mp(center)
        radius = _to_mp(radius)
        if isinstance(radius, mpc) or radius < 0:
            raise ValueError(f"radius must be a nonnegative real, got {radius}")
        self.radius = radius

    @classmethod
    def exact(cls, value: Number) -> "ErrorInterval":
        """A ball of radius 0; Fractions are rounded, so they pick up one rounding radius."""
        center = _to_mp(value)
        radius = _ulps(center) if isinstance(value, Fraction) else 0
        return cls(center, radius)

    @classmethod
    def rounded(cls, value: Number) -> "ErrorInterval":
        """A ball around a value that was itself computed with one rounding."""
        center = _to_mp(value)
        return cls(center, _ulps(center))

    @classmethod
    def _coerce(cls, other) -> "ErrorInterval":
        if isinstance(other, ErrorInterval):
            return other
        return cls.exact(other)

    # --- queries -------------------------------------------------------------

    @property
    def is_real(self) -> bool:
        return not isinstance(self.center, mpc) or self.center.imag == 0

    @property
    def real(self) -> "ErrorInterval":
        return ErrorInterval(mpmath.re(self.center), self.radius)

    @property
    def lower(self) -> mpf:
        return mpmath.re(self.center) - self.radius

    @property
    def upper(self) -> mpf:
        return mpmath.re(self.center) + self.radius

    def contains(self, value: Number, slack: Number = 0) -> bool:
        """True if ``value`` lies within radius + slack of the center."""
        return abs(_to_mp(value) - self.center) <= self.radius + _to_mp(slack)

    def overlaps(self, other: "ErrorInterval") -> bool:
        return abs(other.center - self.center) <= self.radius + other.radius

    # --- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        center = self.center + other.center
        return ErrorInterval(center, self.radius + other.radius + _ulps(center))

    __radd__ = __add__

    def __neg__(self):
        return ErrorInterval(-self.center, self.radius)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        center = self.center * other.center
        radius = (
            abs(self.center) * other.radius
            + abs(other.center) * self.radius
            + self.radius * other.radius
        )
        return ErrorInterval(center, radius + _ulps(center))

    __rmul__ = __mul__

    def reciprocal(self) -> "ErrorInterval":
        magnitude = abs(self.center)
        if magnitude <= self.radius:
            raise ZeroDivisionError("interval contains zero")
        center = 1 / self.center
        radius = self.radius / (magnitude * (magnitude - self.radius))
        return ErrorInterval(center, radius + _ulps(center))

    def __truediv__(self, other):
        return self * self._coerce(other).reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only nonnegative integer powers are supported")
        result = ErrorInterval(1)
        for _ in range(k):
            result = result * self
        return result

    def exp(self) -> "ErrorInterval":
        """exp of a real ball: exp(c) * [e^-r, e^r] is inside exp(c) +- exp(c)(e^r - 1)."""
        if not self.is_real:
            raise ValueError("exp is implemented for real balls only")
        center = mpmath.exp(mpmath.re(self.center))
        radius = center * mpmath.expm1(self.radius)
        return ErrorInterval(center, radius + _ulps(center))

    def log(self) -> "ErrorInterval":
        """log of a positive real ball: |log(c + u) - log c| <= r / (c - r) for |u| <= r."""
        c = mpmath.re(self.center)
        if not self.is_real or c <= self.radius:
            raise ValueError("log needs a ball of positive reals")
        center = mpmath.log(c)
        return ErrorInterval(center, self.radius / (c - self.radius) + _ulps(center))

    # --- rendering -----------------------------------------------------------

    def __float__(self) -> float:
        return float(mpmath.re(self.center))

    def __complex__(self) -> complex:
        return complex(self.center)

    def __repr__(self) -> str:
        return f"ErrorInterval({mpmath.nstr(self.center, 20)} +- {mpmath.nstr(self.radius, 3)})"
