"""Dirichlet characters modulo d.

The unit group (Z/dZ)* is split by the Chinese remainder theorem into cyclic
factors, one per odd prime power (generated by a primitive root) and up to two
for the power of 2 ({-1} mod 4, {-1, 5} mod 2^k for k >= 3). A character is an
exponent vector c over those generators:

    chi(g_1^e_1 ... g_r^e_r) = exp(2 pi i * sum_i c_i e_i / ord_i)

Values are kept exact as rotation numbers (``Fraction`` turns) and as
``CyclotomicNumber``s; floats and mpmath numbers are only produced on request.
"""

import cmath
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Tuple

import mpmath
import numpy as np
from sympy import primitive_root

from app.arith import divisors, euler_phi, factorize, moebius
from app.errors import ArgumentError
from app.utils.cyclotomic import CyclotomicNumber

logger = logging.getLogger(__name__)


def _crt_lift(residue: int, modulus: int, d: int) -> int:
    """The unit mod d that is residue mod `modulus` and 1 mod d/modulus."""
    other = d // modulus
    if other == 1:
        return residue % d
    return (1 + other * ((residue - 1) * pow(other, -1, modulus))) % d


@dataclass(frozen=True)
class CharacterGroup:
    """The group of Dirichlet characters mod d.

    Attributes:
        modulus: d >= 1.
        generators: Units mod d generating the cyclic factors of (Z/dZ)*.
        orders: Order of each generator; their product is phi(d).
    """

    modulus: int
    generators: Tuple[int, ...]
    orders: Tuple[int, ...]
    _logs: Dict[int, Tuple[int, ...]] = field(repr=False, compare=False, hash=False)

    @property
    def size(self) -> int:
        return math.prod(self.orders)

    def discrete_log(self, m: int) -> Optional[Tuple[int, ...]]:
        """Exponent vector of the unit m mod d over the generators; None if gcd(m, d) > 1."""
        return self._logs.get(m % self.modulus)

    def characters(self) -> List["DirichletCharacter"]:
        """All phi(d) characters, the trivial character first."""
        ranges = [range(o) for o in self.orders]
        return [DirichletCharacter(self, tuple(c), index) for index, c in enumerate(itertools.product(*ranges))]

    def __iter__(self) -> Iterator["DirichletCharacter"]:
        return iter(self.characters())

    def __len__(self) -> int:
        return self.size

    def trivial(self) -> "DirichletCharacter":
        return DirichletCharacter(self, (0,) * len(self.orders), 0)

    def character(self, exponents: Tuple[int, ...]) -> "DirichletCharacter":
        """The character with the given exponent vector (reduced modulo the orders)."""
        if len(exponents) != len(self.orders):
            raise ArgumentError(f"expected {len(self.orders)} exponents, got {len(exponents)}")
        reduced = tuple(c % o for c, o in zip(exponents, self.orders))
        index = 0
        for c, o in zip(reduced, self.orders):
            index = index * o + c
        return DirichletCharacter(self, reduced, index)


@lru_cache(maxsize=64)
def character_group(d: int) -> CharacterGroup:
    """Build the character group mod d (cached; groups are immutable).

    Raises:
        ArgumentError: If d < 1.
    """
    if d < 1:
        raise ArgumentError(f"character modulus must be positive, got {d}")
    generators: List[int] = []
    orders: List[int] = []
    for q, e in factorize(d):
        qe = q**e
        if q == 2:
            if e >= 2:
                generators.append(_crt_lift(qe - 1, qe, d))
                orders.append(2)
            if e >= 3:
                generators.append(_crt_lift(5, qe, d))
                orders.append(qe // 4)
        else:
            generators.append(_crt_lift(int(primitive_root(qe)), qe, d))
            orders.append(qe - qe // q)

    logs: Dict[int, Tuple[int, ...]] = {}
    for exps in itertools.product(*[range(o) for o in orders]):
        unit = 1 % d
        for gen, c in zip(generators, exps):
            unit = unit * pow(gen, c, d) % d
        logs[unit] = exps
    if len(logs) != euler_phi(d):
        raise ArgumentError(f"generators {generators} do not generate (Z/{d}Z)*")
    logger.debug("character group mod %d: generators %s, orders %s", d, generators, orders)
    return CharacterGroup(d, tuple(generators), tuple(orders), logs)


@dataclass(frozen=True)
class DirichletCharacter:
    """A Dirichlet character mod d, given by its exponent vector over the group generators."""

    group: CharacterGroup = field(repr=False)
    exponents: Tuple[int, ...]
    index: int

    @property
    def modulus(self) -> int:
        return self.group.modulus

    @property
    def order(self) -> int:
        """o_chi = lcm over generators of ord_i / gcd(c_i, ord_i)."""
        result = 1
        for c, o in zip(self.exponents, self.group.orders):
            k = o // math.gcd(c, o)
            result = result * k // math.gcd(result, k)
        return result

    @property
    def is_trivial(self) -> bool:
        return not any(self.exponents)

    @property
    def is_real(self) -> bool:
        return self.order <= 2

    def angle(self, m: int) -> Optional[Fraction]:
        """chi(m) as a rotation number in [0, 1); None when chi(m) = 0."""
        logs = self.group.discrete_log(m)
        if logs is None:
            return None
        turns = sum((Fraction(c * e, o) for c, e, o in zip(self.exponents, logs, self.group.orders)), Fraction(0))
        return turns - math.floor(turns)

    def __call__(self, m: int) -> CyclotomicNumber:
        return evaluate(self, m)

    def complex_value(self, m: int) -> complex:
        turns = self.angle(m)
        if turns is None:
            return 0j
        return _exact_unit(turns) or cmath.exp(2j * math.pi * float(turns))

    def mp_value(self, m: int):
        """chi(m) as an mpmath number at the current working precision (mpf when real)."""
        turns = self.angle(m)
        if turns is None:
            return mpmath.mpf(0)
        exact = _exact_unit(turns)
        if exact is not None:
            return mpmath.mpf(exact.real) if exact.imag == 0 else mpmath.mpc(exact.real, exact.imag)
        return mpmath.expjpi(2 * mpmath.mpf(turns.numerator) / turns.denominator)

    def value_table(self) -> np.ndarray:
        """chi(r) for r = 0 .. d-1 as a complex128 array (0 off the units)."""
        return np.array([self.complex_value(r) for r in range(self.modulus)], dtype=np.complex128)

    def power(self, r: int) -> "DirichletCharacter":
        """chi^r (r may be negative)."""
        return self.group.character(tuple(c * r for c in self.exponents))

    def conjugate(self) -> "DirichletCharacter":
        return self.power(-1)

    def __repr__(self) -> str:
        return f"DirichletCharacter(mod={self.modulus}, index={self.index}, order={self.order})"


def _exact_unit(turns: Fraction) -> Optional[complex]:
    """1, i, -1, -i for turns in quarters; None otherwise."""
    if (4 * turns).denominator != 1:
        return None
    return (1 + 0j, 1j, -1 + 0j, -1j)[int(4 * turns) % 4]


def evaluate(chi: DirichletCharacter, m: int) -> CyclotomicNumber:
    """chi(m) as an exact element of Q(zeta_{o_chi}); zero when gcd(m, d) > 1."""
    level = chi.order
    turns = chi.angle(m)
    if turns is None:
        return CyclotomicNumber.zero(level)
    return CyclotomicNumber.root_of_unity(turns, level)


def mu_convolution(chi: DirichletCharacter, n: int) -> CyclotomicNumber:
    """h_chi(n) = sum over e | n of chi(e) mu(n/e).

    Raises:
        ArgumentError: If n < 1.
    """
    if n < 1:
        raise ArgumentError(f"mu_convolution needs n >= 1, got {n}")
    total = CyclotomicNumber.zero(chi.order)
    for e in divisors(n):
        mu = moebius(n // e)
        if mu:
            total = total + evaluate(chi, e) * mu
    return total


def psi() -> DirichletCharacter:
    """The non-trivial character mod 4."""
    return character_group(4).characters()[1]
