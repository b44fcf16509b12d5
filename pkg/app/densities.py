"""Theoretical densities of primes whose order of g falls in a residue class.

Exact local densities delta(p; a, d), two estimators of the average density
delta(a, d), the closed form of delta_g(a, 4), the modulus peel-off relations and
the closeness bound between delta_g(a, d) and delta(a, d).
"""

import enum
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Union

import numpy as np

from app.arith import (
    Factorizer,
    PrimeFactorization,
    RationalBase,
    base_primes,
    default_factorizer,
    discriminant_sqrt,
    euler_phi,
    factorize,
    is_in_G,
    kernels,
    omega,
    primes_in_range,
    squarefree_part,
)
from app.characters import psi
from app.constants import a_chi
from app.errors import ArgumentError, HypothesisError
from app.utils.intervals import ErrorInterval

logger = logging.getLogger(__name__)

METHOD_SUM = "degenerate-sum"
METHOD_PRIME_AVERAGE = "prime-average"
METHOD_MOD4 = "closed-form-mod4"
METHOD_MOD4_HALF = "closed-form-mod4-from-half"

# zeta(2) zeta(3) / zeta(6) = sum over squarefree k of 1/(k phi(k)), rounded up
_TOTIENT_RATIO_CONSTANT = 1.9436


@dataclass(frozen=True)
class DensityEstimate:
    """A theoretical density with its enclosure.

    Attributes:
        a, d: The residue class a mod d.
        method: How the value was obtained.
        value: Enclosure; radius 0 for heuristic estimates that carry no bound.
        params: Truncation parameters, rendered as strings.
        certified: False for estimates without a proven error radius.
        exact: The exact rational value when one is known.
    """

    a: int
    d: int
    method: str
    value: ErrorInterval
    params: Dict[str, str] = field(default_factory=dict)
    certified: bool = True
    exact: Optional[Fraction] = None


# --- local densities ---------------------------------------------------------------


def _divisors_with_phi(factorization: PrimeFactorization) -> List[tuple]:
    """(k, phi(k)) for every divisor k of the factored number."""
    pairs = [(1, 1)]
    for q, e in factorization:
        extended = []
        for k, phi in pairs:
            extended.append((k, phi))
            qk, phik = k, phi
            for i in range(e):
                qk *= q
                phik *= (q - 1) if i == 0 else q
                extended.append((qk, phik))
        pairs = extended
    return pairs


def _order_class_counts(p: int, d: int, factorizer: Optional[Factorizer] = None) -> List[int]:
    """counts[a] = number of elements of F_p* whose order is = a (mod d)."""
    counts = [0] * d
    fac = (factorizer or default_factorizer()).factorize(p - 1) if p > 2 else PrimeFactorization(())
    for k, phi in _divisors_with_phi(fac):
        counts[k % d] += phi
    return counts


def local_density_vector(p: int, d: int) -> List[Fraction]:
    """delta(p; a, d) for a = 0 .. d-1; the entries sum to 1."""
    if p < 2 or d < 1:
        raise ArgumentError(f"local density needs p >= 2 and d >= 1, got p={p}, d={d}")
    return [Fraction(c, p - 1) for c in _order_class_counts(p, d)]


def local_density(p: int, a: int, d: int) -> Fraction:
    """delta(p; a, d) = (1/(p-1)) * sum of phi(k) over k | p-1 with k = a (mod d)."""
    return local_density_vector(p, d)[a % d]


# --- average density: degenerate sum -------------------------------------------------


def average_density_sum(a: int, d: int, T: int = 200_000, N: int = 200_000) -> DensityEstimate:
    """Enclose delta(a, d) by truncating its double series over t and squarefree n.

    The n-sum is multiplicative, so for each t it is an Euler product; keeping the
    primes p <= N of n gives

        inner_N(t) = 1/(t phi(dt)) * prod_{p<=N, p|d, p|a} (1 - 1/p)
                     * prod_{p<=N, p∤d, p|t} (1 - 1/p^2) * prod_{p<=N, p∤dt} (1 - 1/(p(p-1)))

    and the primes p > N (none divides d when N >= d) only multiply inner_N(t) by a
    number in [1 - 1/N, 1]. The terms t > T are nonnegative and sum to at most
    sum_{t>T} 1/(t phi(t) phi(d)) <= 2 c / (T phi(d)) with c = zeta(2)zeta(3)/zeta(6),
    because sum_{t<=u} t/phi(t) <= c u. Hence

        (1 - 1/N) S_T <= delta(a, d) <= S_T + 2 c / (T phi(d)),

    S_T being the sum of inner_N(t) over t <= T with gcd(1 + t a, d) = 1.

    Raises:
        ArgumentError: If d < 1, T < 1 or N < max(d, 2).
    """
    if d < 1 or T < 1:
        raise ArgumentError(f"average_density_sum needs d >= 1 and T >= 1, got d={d}, T={T}")
    if N < max(d, 2):
        raise ArgumentError(f"the n-cutoff N={N} must be at least max(d, 2)={max(d, 2)}")
    a %= d
    primes = base_primes(max(N, T))
    small = primes[primes <= N].tolist()

    def divides_d(p: int) -> bool:
        return d % p == 0

    kept_d_part = 1.0
    unit_product = 1.0
    for p in small:
        if divides_d(p):
            if a % p == 0:
                kept_d_part *= 1 - 1 / p
        else:
            unit_product *= 1 - 1 / (p * (p - 1))
    phi_d = euler_phi(d)

    t = np.arange(T + 1, dtype=np.float64)
    weights = np.ones(T + 1, dtype=np.float64)
    for p in primes[primes <= T].tolist():
        if divides_d(p):
            continue
        # p | t, p ∤ d: phi(dt) gains (1 - 1/p), and the n-factor (1 - 1/(p(p-1)))
        # is replaced by (1 - 1/p^2) when p <= N
        factor = p / (p - 1)
        if p <= N:
            factor *= (p * p - 1) * (p - 1) / (p * (p * p - p - 1))
        weights[p::p] *= factor
    residues = (1 + np.arange(T + 1, dtype=np.int64) * a) % d
    mask = np.gcd(residues, d) == 1
    mask[0] = False
    terms = weights[mask] / (t[mask] * t[mask])
    partial = math.fsum(terms.tolist()) * kept_d_part * unit_product / phi_d

    lower = (1 - 1 / N) * partial
    upper = partial + 2 * _TOTIENT_RATIO_CONSTANT / (T * phi_d)
    eps = float(np.finfo(np.float64).eps)
    rounding = (4 * len(small) + 64) * eps * partial
    value = ErrorInterval((lower + upper) / 2, (upper - lower) / 2 + rounding)
    logger.debug("delta(%d,%d) by series: S_T=%.12f radius=%.3g", a, d, partial, float(value.radius))
    return DensityEstimate(a, d, METHOD_SUM, value, {"T": str(T), "N": str(N)})


# --- average density: prime average -------------------------------------------------


def average_density_empirical_vector(d: int, x: int, exact: bool = False) -> List[Union[Fraction, float]]:
    """sum_{p <= x} delta(p; a, d) / pi(x) for every a mod d.

    Float accumulation uses math.fsum (correctly rounded); ``exact=True`` keeps
    Fractions throughout, which is only practical for small x.
    """
    if d < 1 or x < 3:
        raise ArgumentError(f"prime average needs d >= 1 and x >= 3, got d={d}, x={x}")
    factorizer = Factorizer(spf_limit=x + 1) if x < 1 << 26 else default_factorizer()
    exact_sums = [Fraction(0)] * d
    float_terms: List[List[float]] = [[] for _ in range(d)]
    count = 0
    for p in primes_in_range(2, x):
        count += 1
        counts = _order_class_counts(p, d, factorizer)
        for a, c in enumerate(counts):
            if not c:
                continue
            if exact:
                exact_sums[a] += Fraction(c, p - 1)
            else:
                float_terms[a].append(c / (p - 1))
    if exact:
        return [s / count for s in exact_sums]
    return [math.fsum(terms) / count for terms in float_terms]


def average_density_empirical(a: int, d: int, x: int, exact: bool = False) -> DensityEstimate:
    """The prime average of delta(p; a, d) over p <= x, tagged as heuristic (no radius)."""
    value = average_density_empirical_vector(d, x, exact)[a % d]
    logger.warning("prime-average estimate of delta(%d,%d) at x=%d has no certified radius", a % d, d, x)
    exact_value = value if isinstance(value, Fraction) else None
    return DensityEstimate(
        a % d,
        d,
        METHOD_PRIME_AVERAGE,
        ErrorInterval(float(value)),
        {"x": str(x), "exact": str(exact).lower()},
        certified=False,
        exact=exact_value,
    )


# --- delta_g(a, 4) -------------------------------------------------------------------


def _require_in_G(g: RationalBase) -> None:
    if not g.is_integer or not is_in_G(g.numerator):
        raise HypothesisError(f"g={g} is not an integer outside the perfect powers and their negatives")


def _odd_part_primes(D: int) -> List[int]:
    """Primes dividing |D| / 8."""
    rest = abs(D) // 8
    return [p for p, _ in factorize(rest)] if rest > 1 else []


def _a_psi(n: int) -> ErrorInterval:
    return a_chi(psi(), n)


def delta_g_mod4(g: RationalBase, a: int, n: int = 64) -> DensityEstimate:
    """delta_g(a, 4) for odd a in closed form.

    The value is 1/6 unless 8 | D(g) and D(g) has no prime divisor = 1 (mod 4). In
    that case, with the upper sign for a = 1 (mod 4),
    D(g) = +-8 gives 7/48 -+ sgn(g) A_psi / 8 and otherwise
    1/6 -+ sgn(g) (A_psi / 8) prod_{p | D(g)/8} 2p / (p^3 - p^2 - p - 1).

    Raises:
        HypothesisError: If g is not an integer in G.
        ArgumentError: If a is even.
    """
    g = RationalBase.of(g)
    if a % 2 == 0:
        raise ArgumentError(f"delta_g(a, 4) needs odd a, got {a}")
    _require_in_G(g)
    D = discriminant_sqrt(g)
    params = {"g": str(g), "D": str(D)}
    odd_primes = _odd_part_primes(D)
    if D % 8 != 0 or any(p % 4 == 1 for p in odd_primes):
        return DensityEstimate(a % 4, 4, METHOD_MOD4, ErrorInterval.exact(Fraction(1, 6)), params, exact=Fraction(1, 6))

    sign = (1 if a % 4 == 1 else -1) * g.sign
    params["n"] = str(n)
    correction = _a_psi(n) / 8
    if abs(D) == 8:
        value = ErrorInterval.exact(Fraction(7, 48)) - correction * sign
    else:
        product = Fraction(1)
        for p in odd_primes:
            product *= Fraction(2 * p, p**3 - p**2 - p - 1)
        value = ErrorInterval.exact(Fraction(1, 6)) - correction * ErrorInterval.exact(product) * sign
    return DensityEstimate(a % 4, 4, METHOD_MOD4, value, params)


def delta_g_mod4_from_half(
    g: RationalBase, a: int, delta_g_half: Union[Fraction, float, ErrorInterval], n: int = 64
) -> DensityEstimate:
    """delta_g(a, 4) from a supplied delta_g(1, 2):

        delta_g(1,2)/2 + e(D) sgn(g) A_psi (-1)^((a+1)/2) / 8 * prod_{p | D/8} (1 - psi(p)) p / (p^3 - p^2 - p - 1)

    where e(D) = 1 if 8 | D(g) and 0 otherwise.
    """
    g = RationalBase.of(g)
    if a % 2 == 0:
        raise ArgumentError(f"delta_g(a, 4) needs odd a, got {a}")
    _require_in_G(g)
    D = discriminant_sqrt(g)
    params = {"g": str(g), "D": str(D), "delta_half": str(delta_g_half if not isinstance(delta_g_half, ErrorInterval) else delta_g_half.center)}
    if isinstance(delta_g_half, ErrorInterval):
        half = delta_g_half / 2
        exact = None
    elif isinstance(delta_g_half, (int, Fraction)):
        exact = Fraction(delta_g_half) / 2
        half = ErrorInterval.exact(exact)
    else:
        half = ErrorInterval(delta_g_half) / 2
        exact = None
    if D % 8 != 0:
        return DensityEstimate(a % 4, 4, METHOD_MOD4_HALF, half, params, exact=exact)

    chi = psi()
    product = Fraction(1)
    for p in _odd_part_primes(D):
        product *= Fraction((1 - int(chi.complex_value(p).real)) * p, p**3 - p**2 - p - 1)
    if product == 0:
        return DensityEstimate(a % 4, 4, METHOD_MOD4_HALF, half, params, exact=exact)
    params["n"] = str(n)
    sign = g.sign * (-1) ** ((a + 1) // 2)
    value = half + _a_psi(n) * ErrorInterval.exact(product / 8) * sign
    return DensityEstimate(a % 4, 4, METHOD_MOD4_HALF, value, params)


# --- modulus reductions and bounds ------------------------------------------------------


class PeelOff(NamedTuple):
    a: int
    d: int
    multiplier: Fraction


def peel_off(a: int, d: int, semantics: str = "g") -> PeelOff:
    """Reduce the modulus: delta_g(a,d) = delta_g(a,k2(d)) k2(d)/d, delta(a,d) = delta(a,k(d)) k(d)/d.

    Args:
        semantics: "g" for delta_g (reduce to k2(d)), "average" for delta (reduce to k(d)).
    """
    if d < 1:
        raise ArgumentError(f"peel_off needs d >= 1, got {d}")
    ks = kernels(d)
    if semantics == "g":
        reduced = ks.k2
    elif semantics == "average":
        reduced = ks.k
    else:
        raise ArgumentError(f"unknown peel-off semantics {semantics!r} (use 'g' or 'average')")
    return PeelOff(a, reduced, Fraction(reduced, d))


class ClosenessBound(NamedTuple):
    value: Fraction
    vacuous: bool
    d1: int


def closeness_bound(g: RationalBase, d: int) -> ClosenessBound:
    """|delta_g(a,d) - delta(a,d)| <= 3 * 2^(omega(D1)+2) / (phi(D1) D1), D1 = |D(g) / (D(g), d)|.

    The bound is flagged vacuous when it is at least 1/d, the mean density of a
    class mod d: it then cannot separate a typical class from density 0.
    """
    g = RationalBase.of(g)
    _require_in_G(g)
    if d < 1:
        raise ArgumentError(f"closeness_bound needs d >= 1, got {d}")
    D = discriminant_sqrt(g)
    d1 = abs(D // math.gcd(D, d))
    value = Fraction(3 * 2 ** (omega(d1) + 2), euler_phi(d1) * d1)
    return ClosenessBound(value, value >= Fraction(1, d), d1)


class Comparison(str, enum.Enum):
    LE = "<="
    GE = ">="
    EQ = "="


def order_comparison_predicate(g: RationalBase) -> Comparison:
    """Predicted relation between delta_g(2,3;1,3) and delta_g(2,3;2,3).

    With g = sgn(g) g0^h, g0 > 0 not a power: equal iff the squarefree part of g0
    is 3 and nu_2(h) is 0 or 2; otherwise <= if g > 0 and h is even, else >=.
    """
    g = RationalBase.of(g)
    sign, g0, h = g.power_decomposition()
    nu2 = (h & -h).bit_length() - 1
    if squarefree_part(g0.numerator * g0.denominator) == 3 and nu2 in (0, 2):
        return Comparison.EQ
    if sign > 0 and h % 2 == 0:
        return Comparison.LE
    return Comparison.GE
