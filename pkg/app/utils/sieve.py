"""Sieve of Eratosthenes building blocks on numpy arrays."""

import math
from typing import Iterator, Tuple

import numpy as np


def simple_sieve(limit: int) -> np.ndarray:
    """Return all primes <= limit as an int64 array."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p : limit + 1 : p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def sieve_segment(lo: int, hi: int, base_primes: np.ndarray) -> np.ndarray:
    """Return the primes in [lo, hi] (inclusive).

    Args:
        lo: Lower bound, lo >= 0.
        hi: Upper bound, hi >= lo.
        base_primes: Every prime <= isqrt(hi), ascending.
    """
    if hi < 2 or hi < lo:
        return np.array([], dtype=np.int64)
    lo = max(lo, 2)
    size = hi - lo + 1
    mask = np.ones(size, dtype=bool)
    for p in base_primes:
        p = int(p)
        p2 = p * p
        if p2 > hi:
            break
        start = max(p2, ((lo + p - 1) // p) * p)
        if start > hi:
            continue
        mask[start - lo :: p] = False
    return (np.flatnonzero(mask) + lo).astype(np.int64)


def segment_bounds(lo: int, hi: int, segment_size: int) -> Iterator[Tuple[int, int]]:
    """Split [lo, hi] into consecutive inclusive segments of at most segment_size numbers."""
    start = lo
    while start <= hi:
        end = min(hi, start + segment_size - 1)
        yield start, end
        start = end + 1


def smallest_prime_factors(limit: int) -> np.ndarray:
    """Smallest-prime-factor table: spf[m] is the least prime dividing m for 2 <= m < limit.

    Entries 0 and 1 are 0.
    """
    limit = max(limit, 2)
    spf = np.zeros(limit, dtype=np.int32 if limit < 2**31 else np.int64)
    for p in range(2, math.isqrt(limit - 1) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[0] = 0
    spf[1] = 0
    return spf
