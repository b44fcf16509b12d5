"""Exact integer number theory: primes, factorization, arithmetic functions, orders.

Everything in here is a pure function of its inputs (tables are built once and
never mutated afterwards), so it is safe to share across threads and processes.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from sympy import factorint, integer_nthroot, legendre_symbol

from app.errors import ArgumentError, OrderUndefinedError
from app.utils.sieve import segment_bounds, sieve_segment, simple_sieve, smallest_prime_factors

MAX_INT64 = (1 << 63) - 1
DEFAULT_SEGMENT_SIZE = 1 << 22
DEFAULT_SPF_LIMIT = 1 << 20
DEFAULT_TRIAL_LIMIT = 1 << 20
PERFECT_POWER_TABLE_LIMIT = 1 << 20


# --- primes -------------------------------------------------------------------


@lru_cache(maxsize=8)
def base_primes(limit: int) -> np.ndarray:
    """All primes <= limit, sieved segment by segment once limit gets large."""
    if limit <= 1 << 26:
        return simple_sieve(limit)
    inner = base_primes(math.isqrt(limit))
    chunks = [sieve_segment(lo, hi, inner) for lo, hi in segment_bounds(2, limit, DEFAULT_SEGMENT_SIZE)]
    return np.concatenate(chunks)


@dataclass(frozen=True)
class PrimeRange:
    """The primes p with lo <= p <= hi, produced lazily and in ascending order."""

    lo: int
    hi: int
    segment_size: int = DEFAULT_SEGMENT_SIZE

    def segments(self) -> Iterator[np.ndarray]:
        """Yield the primes of the range one sieve segment at a time."""
        if self.hi < 2:
            return
        base = base_primes(math.isqrt(self.hi))
        for lo, hi in segment_bounds(self.lo, self.hi, self.segment_size):
            yield sieve_segment(lo, hi, base)

    def __iter__(self) -> Iterator[int]:
        for chunk in self.segments():
            yield from chunk.tolist()

    def count(self) -> int:
        return sum(len(chunk) for chunk in self.segments())


def primes_in_range(lo: int, hi: int, segment_size: Optional[int] = None) -> PrimeRange:
    """Return the primes in [lo, hi].

    Args:
        lo: Inclusive lower bound, 0 <= lo.
        hi: Inclusive upper bound, lo <= hi <= 2^63 - 1.
        segment_size: Numbers sieved per segment (memory bound).

    Raises:
        ArgumentError: If the bounds are inverted or out of range.
    """
    if lo < 0 or hi < lo:
        raise ArgumentError(f"invalid prime range [{lo}, {hi}]")
    if hi > MAX_INT64:
        raise ArgumentError(f"upper bound {hi} exceeds 2^63-1")
    return PrimeRange(lo, hi, segment_size or DEFAULT_SEGMENT_SIZE)


def first_primes(n: int) -> List[int]:
    """The first n primes p_1 = 2, p_2 = 3, ..."""
    if n < 1:
        raise ArgumentError(f"need n >= 1, got {n}")
    bound = 15
    if n >= 6:
        bound = int(n * (math.log(n) + math.log(math.log(n)))) + 3
    return simple_sieve(bound)[:n].tolist()


# --- factorization --------------------------------------------------------------


@dataclass(frozen=True)
class PrimeFactorization:
    """Ordered (prime, exponent) pairs of a positive integer."""

    factors: Tuple[Tuple[int, int], ...]

    @property
    def value(self) -> int:
        result = 1
        for p, e in self.factors:
            result *= p**e
        return result

    @property
    def primes(self) -> Tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.factors)

    def __len__(self) -> int:
        return len(self.factors)


class Factorizer:
    """Deterministic factorization of 64-bit integers.

    Values below ``spf_limit`` are split with a smallest-prime-factor table; larger
    values are trial divided by sieved primes up to ``trial_limit`` and only a
    cofactor that survives that is handed to sympy.
    """

    def __init__(self, spf_limit: int = DEFAULT_SPF_LIMIT, trial_limit: int = DEFAULT_TRIAL_LIMIT):
        self.spf_limit = max(int(spf_limit), 2)
        self.trial_limit = trial_limit
        self._spf = smallest_prime_factors(self.spf_limit)
        self._trial_primes = simple_sieve(trial_limit).tolist()

    def factorize(self, m: int) -> PrimeFactorization:
        if m < 1:
            raise ArgumentError(f"cannot factorize {m}")
        if m > MAX_INT64:
            raise ArgumentError(f"{m} exceeds 2^63-1")
        counts: Dict[int, int] = {}
        if m >= self.spf_limit:
            m = self._trial_divide(m, counts)
        spf = self._spf
        while m > 1:
            p = int(spf[m])
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            counts[p] = counts.get(p, 0) + e
        return PrimeFactorization(tuple(sorted(counts.items())))

    def _trial_divide(self, m: int, counts: Dict[int, int]) -> int:
        """Strip small primes from m; returns what is left for the table (possibly 1)."""
        for p in self._trial_primes:
            if p * p > m:
                counts[m] = counts.get(m, 0) + 1
                return 1
            if m % p == 0:
                e = 0
                while m % p == 0:
                    m //= p
                    e += 1
                counts[p] = counts.get(p, 0) + e
                if m < self.spf_limit:
                    return m
        for q, e in factorint(m).items():
            counts[int(q)] = counts.get(int(q), 0) + int(e)
        return 1


@lru_cache(maxsize=1)
def default_factorizer() -> Factorizer:
    return Factorizer()


def factorize(m: int) -> PrimeFactorization:
    """Exact factorization of 1 <= m <= 2^63-1; factorize(1) has no factors."""
    return default_factorizer().factorize(m)


# --- arithmetic functions -----------------------------------------------------


def _positive(m: int, name: str) -> None:
    if m < 1:
        raise ArgumentError(f"{name} needs a positive argument, got {m}")


def euler_phi(m: int) -> int:
    _positive(m, "euler_phi")
    result = m
    for p, _ in factorize(m):
        result -= result // p
    return result


def moebius(m: int) -> int:
    _positive(m, "moebius")
    fac = factorize(m)
    if any(e > 1 for _, e in fac):
        return 0
    return -1 if len(fac) % 2 else 1


def gcd(a: int, b: int) -> int:
    return math.gcd(a, b)


def lcm(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return abs(a * b) // math.gcd(a, b)


def omega(m: int) -> int:
    """Number of distinct prime divisors."""
    _positive(m, "omega")
    return len(factorize(m))


def squarefree_part(m: int) -> int:
    """Product of the primes dividing m to an odd power."""
    _positive(m, "squarefree_part")
    result = 1
    for p, e in factorize(m):
        if e % 2:
            result *= p
    return result


def divisors(m: int, factorization: Optional[PrimeFactorization] = None) -> List[int]:
    """All positive divisors of m, ascending."""
    _positive(m, "divisors")
    divs = [1]
    for p, e in factorization or factorize(m):
        divs = [d * p**k for d in divs for k in range(e + 1)]
    return sorted(divs)


class Kernels(NamedTuple):
    k: int
    k1: int
    k2: int


def kernels(d: int) -> Kernels:
    """Squarefree kernel k(d) and its even-modulus variants k1(d), k2(d)."""
    _positive(d, "kernels")
    k = 1
    for p, _ in factorize(d):
        k *= p
    if d % 2:
        return Kernels(k, k, k)
    return Kernels(k, 4 * k, math.gcd(4, d // 2) * k)


# --- the base g -------------------------------------------------------------------


def _valuation(m: int, p: int) -> int:
    m = abs(m)
    e = 0
    while m and m % p == 0:
        m //= p
        e += 1
    return e


@dataclass(frozen=True)
class RationalBase:
    """A base g != -1, 0, 1 stored as a reduced fraction with positive denominator."""

    numerator: int
    denominator: int = 1

    def __post_init__(self):
        if self.denominator < 1:
            raise ArgumentError(f"denominator must be positive, got {self.denominator}")
        if math.gcd(self.numerator, self.denominator) != 1:
            raise ArgumentError(f"{self.numerator}/{self.denominator} is not reduced")
        if self.denominator == 1 and self.numerator in (-1, 0, 1):
            raise ArgumentError(f"g must not be -1, 0 or 1 (got {self.numerator})")

    @classmethod
    def of(cls, value: Union[int, Fraction, str, "RationalBase"]) -> "RationalBase":
        if isinstance(value, RationalBase):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        q = Fraction(value)
        return cls(q.numerator, q.denominator)

    @classmethod
    def parse(cls, text: str) -> "RationalBase":
        """Parse "n" or "n/m" (signed integers); the result is reduced."""
        raw = text.strip()
        parts = raw.split("/")
        try:
            if len(parts) == 1:
                q = Fraction(int(parts[0]))
            elif len(parts) == 2:
                q = Fraction(int(parts[0]), int(parts[1]))
            else:
                raise ValueError(raw)
        except (ValueError, ZeroDivisionError):
            raise ArgumentError(f"cannot parse base g from {text!r}")
        return cls(q.numerator, q.denominator)

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    @property
    def sign(self) -> int:
        return 1 if self.numerator > 0 else -1

    @property
    def is_integer(self) -> bool:
        return self.denominator == 1

    @property
    def height(self) -> int:
        """|numerator| * denominator; the primes dividing it are exactly those with nu_p(g) != 0."""
        return abs(self.numerator) * self.denominator

    def valuation(self, p: int) -> int:
        """nu_p(g), the exponent of p in g."""
        return _valuation(self.numerator, p) - _valuation(self.denominator, p)

    def residue(self, p: int) -> int:
        """g mod p, i.e. numerator * denominator^-1 mod p."""
        if self.height % p == 0:
            raise OrderUndefinedError(self, p)
        return self.numerator * pow(self.denominator, -1, p) % p

    def negate(self) -> "RationalBase":
        return RationalBase(-self.numerator, self.denominator)

    def power_decomposition(self) -> Tuple[int, Fraction, int]:
        """Write g = sign * g0^h with g0 > 0 not an exact power of a rational number."""
        exponents = [e for _, e in factorize(abs(self.numerator))] + [e for _, e in factorize(self.denominator)]
        h = 0
        for e in exponents:
            h = math.gcd(h, e)
        g0 = Fraction(1)
        for p, e in factorize(abs(self.numerator)):
            g0 *= p ** (e // h)
        for p, e in factorize(self.denominator):
            g0 /= p ** (e // h)
        return self.sign, g0, h

    def __str__(self) -> str:
        if self.denominator == 1:
            return str(self.numerator)
        return f"{self.numerator}/{self.denominator}"


def multiplicative_order(
    g: RationalBase, p: int, factorization: Optional[PrimeFactorization] = None
) -> int:
    """Least k >= 1 with g^k = 1 (mod p).

    Walks down from p - 1 one prime factor at a time, so the cost is
    O(omega(p-1) log p) modular exponentiations once p - 1 is factored.

    Raises:
        OrderUndefinedError: If p divides the numerator or denominator of g.
    """
    residue = g.residue(p)
    order = p - 1
    if order == 1:
        return 1
    for q, e in factorization or factorize(order):
        for _ in range(e):
            if pow(residue, order // q, p) != 1:
                break
            order //= q
    return order


def residual_index(g: RationalBase, p: int, factorization: Optional[PrimeFactorization] = None) -> int:
    """r_p(g) = (p - 1) / ord_p(g), the index of <g mod p> in (Z/pZ)*."""
    return (p - 1) // multiplicative_order(g, p, factorization)


def discriminant_sqrt(g: RationalBase) -> int:
    """Discriminant D(g) of Q(sqrt(g)); 1 when g is a rational square (the field is Q)."""
    s = g.sign * squarefree_part(g.height)
    if s == 1:
        return 1
    return s if s % 4 == 1 else 4 * s


@lru_cache(maxsize=None)
def perfect_power_table(limit: int) -> np.ndarray:
    """Boolean table over 0 .. limit; entry m is True iff m = b^k with b >= 2, k >= 2."""
    table = np.zeros(limit + 1, dtype=bool)
    for b in range(2, math.isqrt(limit) + 1):
        if table[b]:
            continue  # powers of b = c^j were marked as powers of c
        v = b * b
        while v <= limit:
            table[v] = True
            v *= b
    return table


def is_in_G(g: int) -> bool:
    """True iff the integer g cannot be written as g0^h or -g0^h with h > 1.

    If g = +-g0^h with g0 rational then g0 is an integer (a rational root of an
    integer is an integer), so the condition is exactly that |g| is not a perfect
    power. Small |g| are looked up in a sieved table, larger ones use exact
    integer roots.
    """
    if g in (-1, 0, 1):
        raise ArgumentError(f"g must not be -1, 0 or 1 (got {g})")
    m = abs(g)
    if m <= PERFECT_POWER_TABLE_LIMIT:
        return not bool(perfect_power_table(PERFECT_POWER_TABLE_LIMIT)[m])
    for k in range(2, m.bit_length() + 1):
        _, exact = integer_nthroot(m, k)
        if exact:
            return False
    return True


def kronecker_symbol(g: RationalBase, p: int) -> int:
    """Legendre symbol (g/p) for an odd prime p not dividing g's height.

    Raises:
        ArgumentError: If p is even.
        OrderUndefinedError: If nu_p(g) != 0 (the census skips such p).
    """
    if p % 2 == 0:
        raise ArgumentError(f"kronecker_symbol needs an odd prime, got {p}")
    return int(legendre_symbol(g.residue(p), p))
