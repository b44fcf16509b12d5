"""Brute-force oracles run by `orderdist selftest`.

Each check compares a fast implementation with the direct definition for
small primes and moduli. Checks return a short description; a disagreement
raises VerificationError.
"""

import logging
import math
from fractions import Fraction
from typing import Callable, List, Tuple

from app.arith import Factorizer, RationalBase, kronecker_symbol, multiplicative_order, primes_in_range
from app.census import CensusSpec, census_segment
from app.characters import character_group, evaluate, mu_convolution
from app.densities import local_density_vector
from app.errors import VerificationError
from app.utils.cyclotomic import CyclotomicNumber

logger = logging.getLogger(__name__)

SELFTEST_PRIME_LIMIT = 200
SELFTEST_BASES = ("2", "3", "5", "-2", "-5", "1/2", "-11")


def _naive_order(residue: int, p: int) -> int:
    k, value = 1, residue % p
    while value != 1:
        value = value * residue % p
        k += 1
    return k


def check_orders(limit: int = SELFTEST_PRIME_LIMIT) -> str:
    checked = 0
    for text in SELFTEST_BASES:
        g = RationalBase.parse(text)
        for p in primes_in_range(2, limit):
            if g.height % p == 0:
                continue
            fast = multiplicative_order(g, p)
            slow = _naive_order(g.residue(p), p)
            if fast != slow:
                raise VerificationError(f"ord_{p}({g}) = {fast}, brute force gives {slow}")
            checked += 1
    return f"{checked} orders agree with repeated multiplication"


def check_local_densities(limit: int = SELFTEST_PRIME_LIMIT, max_modulus: int = 12) -> str:
    for p in primes_in_range(3, limit):
        orders = [_naive_order(u, p) for u in range(1, p)]
        for d in range(1, max_modulus + 1):
            expected = [Fraction(sum(1 for k in orders if k % d == a), p - 1) for a in range(d)]
            if local_density_vector(p, d) != expected:
                raise VerificationError(f"local densities differ at p={p}, d={d}")
    return f"local densities match element orders for p <= {limit}, d <= {max_modulus}"


def check_legendre(limit: int = SELFTEST_PRIME_LIMIT) -> str:
    for text in SELFTEST_BASES:
        g = RationalBase.parse(text)
        for p in primes_in_range(3, limit):
            if g.height % p == 0:
                continue
            residue = g.residue(p)
            euler = pow(residue, (p - 1) // 2, p)
            expected = 1 if euler == 1 else -1
            if kronecker_symbol(g, p) != expected:
                raise VerificationError(f"({g}/{p}) disagrees with Euler's criterion")
    return "Legendre symbols agree with Euler's criterion"


def check_characters(max_modulus: int = 30) -> str:
    for d in range(1, max_modulus + 1):
        chars = character_group(d).characters()
        for m in range(1, d + 1):
            if math.gcd(m, d) != 1:
                continue
            column = CyclotomicNumber.zero(1)
            for chi in chars:
                column = column + evaluate(chi, m)
            expected = len(chars) if m % d == 1 % d else 0
            if column != expected:
                raise VerificationError(f"column orthogonality fails mod {d} at m={m}")
        for chi in chars:
            for m in range(1, d + 1):
                for n in range(1, d + 1):
                    if evaluate(chi, m * n) != evaluate(chi, m) * evaluate(chi, n):
                        raise VerificationError(f"{chi} is not multiplicative at {m}, {n}")
    chi = character_group(4).characters()[1]
    if [mu_convolution(chi, n) for n in (1, 2, 4)] != [1, -1, 0]:
        raise VerificationError("h_psi(1), h_psi(2), h_psi(4) should be 1, -1, 0")
    return f"character orthogonality and multiplicativity hold for d <= {max_modulus}"


def check_census(limit: int = SELFTEST_PRIME_LIMIT) -> str:
    factorizer = Factorizer(spf_limit=limit + 1)
    for text in SELFTEST_BASES:
        g = RationalBase.parse(text)
        spec = CensusSpec(g, limit, (3, 4, 5), conditions=((1, 4), (3, 4)), t_max=8, segment_size=64)
        acc = census_segment(spec, factorizer, 2, limit)
        acc.check_identities()
        for d in spec.order_moduli:
            for a in range(d):
                expected = sum(
                    1
                    for p in primes_in_range(2, limit)
                    if g.height % p and _naive_order(g.residue(p), p) % d == a
                )
                if acc.count(a, d) != expected:
                    raise VerificationError(f"census count N_{g}({a},{d}) = {acc.count(a, d)}, brute force {expected}")
    return f"census counts match brute force for p <= {limit}"


CHECKS: List[Tuple[str, Callable[[], str]]] = [
    ("orders", check_orders),
    ("local-densities", check_local_densities),
    ("legendre", check_legendre),
    ("characters", check_characters),
    ("census", check_census),
]


def run_selftest() -> List[Tuple[str, str]]:
    """Run every oracle; returns (name, detail) pairs.

    Raises:
        VerificationError: On the first disagreement.
    """
    results = []
    for name, check in CHECKS:
        detail = check()
        logger.info("[OK] %s: %s", name, detail)
        results.append((name, detail))
    return results
