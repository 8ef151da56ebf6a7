"""Small exact-arithmetic helpers shared by the counting and density code."""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np


def iroot(x: int, k: int) -> int:
    """Largest integer r >= 0 with r**k <= x (binary search, exact for big ints)."""
    if k < 1:
        raise ValueError("root index must be positive")
    if x < 0:
        raise ValueError("iroot of a negative number")
    if x < 2 or k == 1:
        return x
    lo, hi = 0, 1 << (x.bit_length() // k + 1)
    while lo < hi:
        mid = (lo + hi + 1) >> 1
        if mid**k <= x:
            lo = mid
        else:
            hi = mid - 1
    return lo


def lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


def as_fraction(x) -> Fraction:
    """Parse an exact rational: int, Fraction, or a "p/q" / integer string.

    Decimal strings and floats are rejected so that case splits such as
    l1 == 2*l2 stay exact.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        s = x.strip()
        if any(ch in s for ch in ".eE"):
            raise ValueError(f"decimal literal {x!r} rejected; use p/q")
        num, sep, den = s.partition("/")
        try:
            if sep:
                return Fraction(int(num), int(den))
            return Fraction(int(num))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational literal: {x!r}") from exc
    raise TypeError(f"cannot interpret {type(x).__name__} as an exact rational")


def fmt_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def count_congruent(lo: int, hi: int, r: int, m: int) -> int:
    """Number of integers x in [lo, hi] with x = r (mod m), m >= 1."""
    if hi < lo:
        return 0
    return (hi - r) // m - (lo - 1 - r) // m


def floor_div(p: int, q: int) -> int:
    return p // q


def ceil_div(p: int, q: int) -> int:
    return -((-p) // q)


def linear_range(c: int, q: int, bound: int) -> tuple[int, int]:
    """Integer interval of x with |c*x + q| <= bound, for c != 0 (may be empty)."""
    if c > 0:
        return ceil_div(-bound - q, c), floor_div(bound - q, c)
    return ceil_div(bound - q, c), floor_div(-bound - q, c)


def primes_upto(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def totients_upto(n: int) -> np.ndarray:
    """Euler phi(0..n) as int64; phi[0] is set to 0."""
    phi = np.arange(n + 1, dtype=np.int64)
    for p in primes_upto(n):
        phi[p::p] -= phi[p::p] // p
    return phi
