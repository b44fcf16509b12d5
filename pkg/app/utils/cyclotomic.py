"""Exact elements of a cyclotomic field Q(zeta_N).

A number is kept as an unreduced coefficient vector over zeta_N^0 .. zeta_N^(N-1);
sums and products stay cheap, and equality is decided once by reducing modulo the
N-th cyclotomic polynomial.
"""

import math
from fractions import Fraction
from typing import Dict, Sequence, Tuple, Union

from sympy import Poly, QQ, Rational, Symbol, cyclotomic_poly

_X = Symbol("x")

Scalar = Union[int, Fraction]


class CyclotomicNumber:
    """sum_k c_k zeta_N^k with rational c_k."""

    __slots__ = ("level", "coefficients")

    def __init__(self, level: int, coefficients: Sequence[Scalar]):
        if level < 1:
            raise ValueError(f"cyclotomic level must be positive, got {level}")
        if len(coefficients) != level:
            raise ValueError(f"expected {level} coefficients, got {len(coefficients)}")
        self.level = level
        self.coefficients: Tuple[Scalar, ...] = tuple(coefficients)

    @classmethod
    def zero(cls, level: int = 1) -> "CyclotomicNumber":
        return cls(level, [0] * level)

    @classmethod
    def rational(cls, value: Scalar, level: int = 1) -> "CyclotomicNumber":
        coeffs = [0] * level
        coeffs[0] = value
        return cls(level, coeffs)

    @classmethod
    def root_of_unity(cls, turns: Fraction, level: int) -> "CyclotomicNumber":
        """exp(2 pi i * turns) where turns * level is an integer."""
        k = turns * level
        if k.denominator != 1:
            raise ValueError(f"{turns} is not a multiple of 1/{level}")
        coeffs = [0] * level
        coeffs[int(k) % level] = 1
        return cls(level, coeffs)

    def lift(self, level: int) -> "CyclotomicNumber":
        """Re-express in Q(zeta_level); level must be a multiple of self.level."""
        if level == self.level:
            return self
        if level % self.level:
            raise ValueError(f"cannot lift level {self.level} to {level}")
        step = level // self.level
        coeffs = [0] * level
        for k, c in enumerate(self.coefficients):
            coeffs[k * step] = c
        return CyclotomicNumber(level, coeffs)

    def _aligned(self, other: "CyclotomicNumber") -> Tuple["CyclotomicNumber", "CyclotomicNumber"]:
        level = self.level * other.level // math.gcd(self.level, other.level)
        return self.lift(level), other.lift(level)

    def _coerce(self, other) -> "CyclotomicNumber":
        if isinstance(other, CyclotomicNumber):
            return other
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber.rational(other, self.level)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._aligned(other)
        return CyclotomicNumber(a.level, [x + y for x, y in zip(a.coefficients, b.coefficients)])

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicNumber(self.level, [-c for c in self.coefficients])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._aligned(other)
        n = a.level
        out = [0] * n
        for i, x in enumerate(a.coefficients):
            if not x:
                continue
            for j, y in enumerate(b.coefficients):
                if y:
                    out[(i + j) % n] += x * y
        return CyclotomicNumber(n, out)

    __rmul__ = __mul__

    def reduced(self) -> Tuple[Fraction, ...]:
        """Canonical coefficients of the remainder modulo Phi_level (length phi(level))."""
        terms = [Rational(c.numerator, c.denominator) for c in map(Fraction, reversed(self.coefficients))]
        modulus = Poly(cyclotomic_poly(self.level, _X), _X, domain=QQ)
        rem = Poly(terms, _X, domain=QQ).rem(modulus)
        degree = modulus.degree()
        coeffs = [Fraction(int(c.numerator), int(c.denominator)) for c in reversed(rem.all_coeffs())]
        coeffs += [Fraction(0)] * (degree - len(coeffs))
        return tuple(coeffs[:degree]) if degree else tuple()

    def is_zero(self) -> bool:
        if not any(self.coefficients):
            return True
        return not any(self.reduced())

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def as_dict(self) -> Dict[int, Scalar]:
        return {k: c for k, c in enumerate(self.coefficients) if c}

    def __repr__(self) -> str:
        terms = " + ".join(f"{c}*z{self.level}^{k}" for k, c in self.as_dict().items()) or "0"
        return f"CyclotomicNumber({terms})"
