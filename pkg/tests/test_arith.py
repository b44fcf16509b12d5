import math
from fractions import Fraction

import pytest
from sympy import factorint, isprime, primerange

from app.arith import (
    Factorizer,
    RationalBase,
    discriminant_sqrt,
    euler_phi,
    factorize,
    first_primes,
    is_in_G,
    kernels,
    kronecker_symbol,
    moebius,
    multiplicative_order,
    primes_in_range,
    residual_index,
)
from app.errors import ArgumentError, OrderUndefinedError


def _naive_order(residue, p):
    k, value = 1, residue % p
    while value != 1:
        value = value * residue % p
        k += 1
    return k


def test_primes_in_range():
    """Sieved primes agree with sympy over [0, 10^6]."""
    print("\n=== Testing Prime Enumeration ===")
    assert list(primes_in_range(1, 10)) == [2, 3, 5, 7]
    assert primes_in_range(2, 100).count() == 25
    assert list(primes_in_range(0, 1)) == []
    assert list(primes_in_range(1_000_000, 10**6)) == []
    primes = list(primes_in_range(0, 10**6))
    print(f"pi(10^6) = {len(primes)}")
    assert primes == list(primerange(2, 10**6 + 1))


def test_prime_segmentation_is_invisible():
    """Segment size and split points do not change the enumeration."""
    print("\n=== Testing Segmented Sieve ===")
    whole = list(primes_in_range(2, 100_000))
    assert list(primes_in_range(2, 100_000, segment_size=1000)) == whole
    assert list(primes_in_range(2, 100_000, segment_size=64)) == whole
    split = list(primes_in_range(2, 54_321)) + list(primes_in_range(54_322, 100_000))
    assert split == whole


def test_prime_range_rejects_bad_bounds():
    with pytest.raises(ArgumentError):
        primes_in_range(10, 5)
    with pytest.raises(ArgumentError):
        primes_in_range(-1, 5)
    with pytest.raises(ArgumentError):
        primes_in_range(0, 1 << 63)


def test_first_primes():
    assert first_primes(1) == [2]
    assert first_primes(10) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert first_primes(64)[-1] == 311
    assert first_primes(256)[-1] == 1619


def test_factorize():
    """Factorizations are exact and ordered."""
    print("\n=== Testing Factorization ===")
    assert factorize(12).factors == ((2, 2), (3, 1))
    assert factorize(1).factors == ()
    assert factorize(97).factors == ((97, 1),)
    big = factorize(2038074742)
    print(f"2038074742 = {big.factors}")
    assert big.value == 2038074742
    assert all(isprime(p) for p in big.primes)
    with pytest.raises(ArgumentError):
        factorize(0)


def test_factorizer_beyond_spf_table():
    """Trial division and the sympy fallback take over above the table."""
    small = Factorizer(spf_limit=1000, trial_limit=100)
    for m in (1001, 65_536, 999_983 * 1_000_003, (1 << 61) - 1, 2**40 * 3**5):
        assert dict(small.factorize(m).factors) == factorint(m)


def test_arithmetic_functions():
    print("\n=== Testing Arithmetic Functions ===")
    assert euler_phi(1) == 1
    assert euler_phi(10) == 4
    assert moebius(1) == 1
    assert moebius(10) == 1
    assert moebius(12) == 0
    assert moebius(30) == -1
    for m in range(1, 500):
        assert euler_phi(m) == sum(1 for k in range(1, m + 1) if math.gcd(k, m) == 1)
    for p in primes_in_range(2, 10_000):
        assert euler_phi(p) == p - 1
        assert moebius(p) == -1


def test_multiplicative_order_examples():
    print("\n=== Testing Multiplicative Order ===")
    assert multiplicative_order(RationalBase(2), 7) == 3
    assert multiplicative_order(RationalBase(1, 2), 5) == 4
    assert multiplicative_order(RationalBase(2), 13) == 12
    assert residual_index(RationalBase(2), 7) == 2
    assert residual_index(RationalBase(2), 11) == 1
    with pytest.raises(OrderUndefinedError):
        multiplicative_order(RationalBase(2), 2)
    with pytest.raises(OrderUndefinedError):
        multiplicative_order(RationalBase(1, 3), 3)


def test_multiplicative_order_brute_force():
    """The factored walk agrees with repeated multiplication."""
    for text in ("2", "3", "5", "-2", "-5", "1/2", "3/7"):
        g = RationalBase.parse(text)
        for p in primes_in_range(2, 2000):
            if g.height % p == 0:
                continue
            assert multiplicative_order(g, p) == _naive_order(g.residue(p), p)


def test_order_times_index():
    for g in (RationalBase(2), RationalBase(-3), RationalBase(2, 3)):
        for p in primes_in_range(5, 10_000):
            assert residual_index(g, p) * multiplicative_order(g, p) == p - 1


def test_kernels():
    print("\n=== Testing Kernels ===")
    assert kernels(45) == (15, 15, 15)
    assert kernels(12) == (6, 24, 12)
    assert kernels(16) == (2, 8, 8)
    assert kernels(1) == (1, 1, 1)
    for d in range(1, 10_000):
        k, k1, k2 = kernels(d)
        assert k2 % k == 0
        assert k1 % k2 == 0


def test_discriminant():
    assert discriminant_sqrt(RationalBase(2)) == 8
    assert discriminant_sqrt(RationalBase(-11)) == -11
    assert discriminant_sqrt(RationalBase(6)) == 24
    assert discriminant_sqrt(RationalBase(5)) == 5
    assert discriminant_sqrt(RationalBase(1, 2)) == 8
    assert discriminant_sqrt(RationalBase(4)) == 1
    for g in range(2, 300):
        for signed in (g, -g):
            D = discriminant_sqrt(RationalBase(signed))
            assert D % 4 in (0, 1)
            for p, _ in factorize(abs(D)):
                assert (2 * g) % p == 0


def test_is_in_G():
    """Membership agrees with a direct search over +-g0^h, g0 integer, for |g| <= 10^6."""
    print("\n=== Testing Membership in G ===")
    assert is_in_G(2)
    assert is_in_G(-2)
    assert not is_in_G(8)
    assert not is_in_G(-8)
    assert not is_in_G(-4)
    limit = 10**6
    powers = set()
    for g0 in range(-math.isqrt(limit), math.isqrt(limit) + 1):
        if abs(g0) < 2:
            continue
        v = g0 * g0
        while abs(v) <= limit:
            powers.update((v, -v))
            v *= g0
    for g in range(2, limit + 1):
        assert is_in_G(g) == (g not in powers), g
        assert is_in_G(-g) == (-g not in powers), -g
    with pytest.raises(ArgumentError):
        is_in_G(1)


def test_is_in_G_beyond_the_table():
    assert is_in_G(2**61 - 1)
    assert is_in_G(10**12 + 1)
    assert not is_in_G(3**30)
    assert not is_in_G(-(7**21))
    assert not is_in_G((2**20 + 7) ** 2)


def test_kronecker_symbol():
    assert kronecker_symbol(RationalBase(2), 7) == 1
    assert kronecker_symbol(RationalBase(2), 5) == -1
    for g in (RationalBase(2), RationalBase(-3), RationalBase(5, 7)):
        for p in primes_in_range(3, 1000):
            if g.height % p == 0:
                continue
            euler = pow(g.residue(p), (p - 1) // 2, p)
            assert kronecker_symbol(g, p) == (1 if euler == 1 else -1)
    with pytest.raises(ArgumentError):
        kronecker_symbol(RationalBase(3), 2)


def test_rational_base_parsing():
    print("\n=== Testing Base Parsing ===")
    g = RationalBase.parse("3/6")
    assert (g.numerator, g.denominator) == (1, 2)
    assert str(RationalBase.parse("-2/4")) == "-1/2"
    assert RationalBase.parse(" 7 ").numerator == 7
    for bad in ("1", "-1", "0", "abc", "1e7", "1/0", "1/2/3"):
        with pytest.raises(ArgumentError):
            RationalBase.parse(bad)
    assert g.valuation(2) == -1


def test_power_decomposition():
    assert RationalBase(4).power_decomposition() == (1, 2, 2)
    assert RationalBase(-8).power_decomposition() == (-1, 2, 3)
    assert RationalBase(36).power_decomposition() == (1, 6, 2)
    assert RationalBase(1, 4).power_decomposition() == (1, Fraction(1, 2), 2)
    assert RationalBase(12).power_decomposition() == (1, 12, 1)
