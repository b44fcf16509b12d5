"""Certified evaluation of A, A_chi, B_chi and the Dirichlet L-values they need.

All results are ``ErrorInterval``s. Internal work runs at an elevated mpmath
precision; radii account for truncation (with proven bounds, stated next to the
code that uses them) and for rounding.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Tuple

import mpmath
import numpy as np
from mpmath import mpc, mpf

from app.arith import base_primes, first_primes, moebius
from app.characters import DirichletCharacter, character_group
from app.errors import ArgumentError, PrecisionNotAttainedError
from app.utils.intervals import ErrorInterval

logger = logging.getLogger(__name__)

#: Smallest n for which the R_1 window of the L-value product formula is known.
MIN_PRODUCT_N = 31
R1_EXPONENT = mpf("3.85")

#: Published value of A, used by tests and the self-test.
A_REFERENCE = mpf("0.3739558136")

_WORKING_DPS = 40
_INTERNAL_TARGET = 1e-30
_EM_TERMS = 15
_MAX_HEAD_TERMS = 1 << 20
_A_PRIME_CUTOFF = 1000


@dataclass(frozen=True)
class LValue:
    """L(s, chi) for an integer s >= 2, with a certified enclosure."""

    s: int
    chi: DirichletCharacter
    value: ErrorInterval


def _residue_values(chi: DirichletCharacter) -> List:
    return [chi.mp_value(r) for r in range(chi.modulus)]


def _euler_maclaurin_tail(s: int, d: int, values: List, periods: int) -> Tuple:
    """sum_{m > periods*d} chi(m) m^-s, split by residue r = m mod d.

    For each residue, f(k) = (k d + r)^-s summed over k >= periods is expanded as

        int_N^oo f + f(N)/2 + sum_j B_2j/(2j)! d^(2j-1) (s)_(2j-1) (N d + r)^(-s-2j+1)

    f is completely monotone, so the remainder after J correction terms is bounded
    by the absolute value of the first omitted term.
    """
    total = mpf(0)
    bound = mpf(0)
    for r in range(1, d + 1):
        c = values[r % d]
        if c == 0:
            continue
        x = mpf(periods * d + r)
        t = x ** (1 - s) / (d * (s - 1)) + x ** (-s) / 2
        last = mpf(0)
        for j in range(1, _EM_TERMS + 2):
            term = (
                mpmath.bernoulli(2 * j)
                / mpmath.factorial(2 * j)
                * mpf(d) ** (2 * j - 1)
                * mpmath.rf(s, 2 * j - 1)
                * x ** (-s - 2 * j + 1)
            )
            if j <= _EM_TERMS:
                t += term
            else:
                last = abs(term)
        total += c * t
        bound += last
    return total, bound


def l_value(s: int, chi: DirichletCharacter, target_abs_error: float = 1e-12) -> LValue:
    """Enclose L(s, chi) = sum_{m >= 1} chi(m) m^-s with radius <= target_abs_error.

    The head sum over m <= N d is evaluated directly and the tail per residue class
    by Euler-Maclaurin; N doubles until the remainder bound meets the target.

    Raises:
        ArgumentError: If s < 2 or the target is not positive.
        PrecisionNotAttainedError: If the target needs more than 2^20 head terms.
    """
    if s < 2:
        raise ArgumentError(f"l_value needs an integer s >= 2, got {s}")
    if not target_abs_error > 0:
        raise ArgumentError(f"target_abs_error must be positive, got {target_abs_error}")
    d = chi.modulus
    dps = max(30, int(-math.log10(target_abs_error)) + 20)
    with mpmath.workdps(dps):
        values = _residue_values(chi)
        target = mpf(target_abs_error)
        periods = max(8, -(-32 // d))
        while True:
            tail, bound = _euler_maclaurin_tail(s, d, values, periods)
            if bound <= target / 2:
                break
            periods *= 2
            if periods * d > _MAX_HEAD_TERMS:
                raise PrecisionNotAttainedError(
                    f"L({s}, chi mod {d}) cannot reach radius {target_abs_error} within {_MAX_HEAD_TERMS} terms"
                )
        head = mpmath.fsum(values[m % d] * mpf(m) ** (-s) for m in range(1, periods * d + 1) if values[m % d] != 0)
        center = head + tail
        rounding = (periods * d + 2 * d * _EM_TERMS) * mpf(2) ** (3 - mpmath.mp.prec)
        logger.debug("L(%d, chi mod %d #%d): %d periods, tail bound %s", s, d, chi.index, periods, mpmath.nstr(bound, 3))
        if chi.is_real:
            center = mpmath.re(center)
        return LValue(s, chi, ErrorInterval(center, bound + rounding))


def zeta_value(s: int, target_abs_error: float = 1e-12) -> ErrorInterval:
    """zeta(s) as the L-value of the character mod 1."""
    return l_value(s, character_group(1).trivial(), target_abs_error).value


def _lucas(n: int) -> int:
    a, b = 2, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def _prime_zeta_tail(n: int, primes: List[int], cutoff_digits: int) -> Tuple:
    """sum_{p > max(primes)} p^-n, from P(n) = sum_k mu(k)/k log zeta(k n).

    log zeta(s) <= zeta(s) - 1 <= 3 * 2^-s for s >= 2, so dropping k > K costs at
    most 6 * 2^(-(K+1) n).
    """
    k_max = math.ceil(cutoff_digits * math.log2(10) / n)
    full = mpf(0)
    for k in range(1, k_max + 1):
        mu = moebius(k)
        if mu:
            full += mpf(mu) / k * mpmath.log(mpmath.zeta(k * n))
    head = mpmath.fsum(mpf(p) ** (-n) for p in primes)
    bound = 6 * mpf(2) ** (-(k_max + 1) * n)
    return full - head, bound


@lru_cache(maxsize=4)
def constant_A(target_abs_error: float = 1e-12) -> ErrorInterval:
    """Enclose A = prod_p (1 - 1/(p(p-1))).

    The primes p <= 1000 are multiplied out. For the rest, with x = 1/p,

        log(1 - 1/(p(p-1))) = log(1 - x - x^2) - log(1 - x) = -sum_{n>=2} (L_n - 1) x^n / n

    with Lucas numbers L_n, so the tail is exp(-sum_n (L_n - 1)/n P_{>Q}(n)) where
    P_{>Q} is the prime zeta function restricted to p > Q.

    Raises:
        PrecisionNotAttainedError: If the enclosure is wider than target_abs_error.
    """
    with mpmath.workdps(50):
        primes = base_primes(_A_PRIME_CUTOFF).tolist()
        head = ErrorInterval(1)
        for p in primes:
            head = head * ErrorInterval.rounded(1 - mpf(1) / (p * (p - 1)))

        q = mpf(_A_PRIME_CUTOFF)
        ratio = mpmath.phi / q
        n_max = 2
        # sum_{n > M} (L_n - 1)/n P_{>Q}(n) <= Q (phi/Q)^(M+1) / ((M+1) M (1 - phi/Q))
        while q * ratio ** (n_max + 1) / ((n_max + 1) * n_max * (1 - ratio)) > mpf(10) ** -45:
            n_max += 1
        truncation = q * ratio ** (n_max + 1) / ((n_max + 1) * n_max * (1 - ratio))

        exponent = mpf(0)
        bound = truncation
        for n in range(2, n_max + 1):
            tail, err = _prime_zeta_tail(n, primes, 45)
            weight = mpf(_lucas(n) - 1) / n
            exponent += weight * tail
            bound += weight * err
        bound += n_max * mpf(2) ** (4 - mpmath.mp.prec)
        value = head * ErrorInterval(-exponent, bound).exp()
        logger.debug("A: %d primes multiplied out, %d tail exponents", len(primes), n_max - 1)
    if value.radius > target_abs_error:
        raise PrecisionNotAttainedError(f"A enclosed only to {mpmath.nstr(value.radius, 3)}")
    return value


def s_n_product(chi: DirichletCharacter, n: int) -> ErrorInterval:
    """S(n): the finite product over the first n primes of
    (1 + chi(p)/(p(p^2-p-1))) (1 - chi(p)/p^3) (1 - chi(p)/p^4)."""
    if n < 1:
        raise ArgumentError(f"s_n_product needs n >= 1, got {n}")
    with mpmath.workdps(_WORKING_DPS):
        acc = ErrorInterval(1)
        for p in first_primes(n):
            c = chi.mp_value(p)
            if c == 0:
                continue
            q = mpf(p)
            acc = (
                acc
                * ErrorInterval.rounded(1 + c / (q * (q * q - q - 1)))
                * ErrorInterval.rounded(1 - c / q**3)
                * ErrorInterval.rounded(1 - c / q**4)
            )
        return acc


def r1_radius(n: int) -> mpf:
    """p_{n+1}^-3.85, the half-width of the window around 1 that contains R_1."""
    return mpf(first_primes(n + 1)[-1]) ** (-R1_EXPONENT)


def b_chi(chi: DirichletCharacter, n: int = 64) -> ErrorInterval:
    """B_chi = A L(2,chi) L(3,chi) L(4,chi) S(n) R_1, with R_1 in the disc |R_1 - 1| <= p_{n+1}^-3.85.

    Raises:
        ArgumentError: If n < 31; the R_1 bound is only known for p_n >= 127.
    """
    if n < MIN_PRODUCT_N:
        raise ArgumentError(f"B_chi product formula requires n >= {MIN_PRODUCT_N} (p_n >= 127), got n={n}")
    with mpmath.workdps(_WORKING_DPS):
        value = constant_A(_INTERNAL_TARGET)
        for s in (2, 3, 4):
            value = value * l_value(s, chi, _INTERNAL_TARGET).value
        value = value * s_n_product(chi, n) * ErrorInterval(1, r1_radius(n))
        if chi.is_real:
            value = value.real
    logger.debug("B_chi mod %d #%d at n=%d: %s", chi.modulus, chi.index, n, value)
    return value


def _excluded_factor(d: int) -> Fraction:
    """prod over p | d of (1 - 1/(p(p-1)))."""
    result = Fraction(1)
    for p in base_primes(d).tolist():
        if d % p == 0:
            result *= 1 - Fraction(1, p * (p - 1))
    return result


def a_chi(chi: DirichletCharacter, n: int = 64) -> ErrorInterval:
    """A_chi = B_chi / prod_{p | d}(1 - 1/(p(p-1))); exactly 1 for a trivial character."""
    if n < MIN_PRODUCT_N:
        raise ArgumentError(f"A_chi product formula requires n >= {MIN_PRODUCT_N} (p_n >= 127), got n={n}")
    if chi.is_trivial:
        return ErrorInterval(1)
    with mpmath.workdps(_WORKING_DPS):
        return b_chi(chi, n) / ErrorInterval.exact(_excluded_factor(chi.modulus))


def naive_a_chi(chi: DirichletCharacter, cutoff: int) -> ErrorInterval:
    """Truncated Euler product for A_chi over p <= cutoff, evaluated in float64 with numpy.

    Each omitted factor is 1 + u_p with |u_p| <= 2p/((p^2-1)(p-1)) <= 2/(p-1)^2, so
    the tail lies in the disc around 1 of radius exp(2/(cutoff-1)) - 1.
    """
    if cutoff < 3:
        raise ArgumentError(f"naive_a_chi needs a cutoff >= 3, got {cutoff}")
    if chi.is_trivial:
        return ErrorInterval(1)
    primes = base_primes(cutoff)
    values = chi.value_table()[primes % chi.modulus]
    mask = values != 0
    p = primes[mask].astype(np.float64)
    c = values[mask]
    factors = 1 + (c - 1) * p / ((p * p - c) * (p - 1))
    center = complex(np.prod(factors))
    magnitude = abs(center)
    tail = magnitude * math.expm1(2 / (cutoff - 1))
    rounding = 8 * (len(p) + 1) * np.finfo(np.float64).eps * magnitude
    value = mpf(center.real) if chi.is_real else mpc(center.real, center.imag)
    return ErrorInterval(value, tail + rounding)


def l_factor_ratio(chi: DirichletCharacter, n: int = 64) -> ErrorInterval:
    """B_chi L(6, chi^2) / (A L(2, chi) L(3, chi)); the leading L-factors of B_chi divided out."""
    with mpmath.workdps(_WORKING_DPS):
        numerator = b_chi(chi, n) * l_value(6, chi.power(2), _INTERNAL_TARGET).value
        denominator = (
            constant_A(_INTERNAL_TARGET)
            * l_value(2, chi, _INTERNAL_TARGET).value
            * l_value(3, chi, _INTERNAL_TARGET).value
        )
        return numerator / denominator
