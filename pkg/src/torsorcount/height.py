"""The toric height H_L on Cox coordinates, exact and real-valued."""

from __future__ import annotations

from functools import lru_cache
from math import gcd
from typing import NamedTuple

from .arith import lcm
from .invariants import Boundary, Setup


class CoxTuple(NamedTuple):
    a: int
    b: int
    c: int
    d: int
    z: int
    w: int


class RealCoxTuple(NamedTuple):
    a: float
    b: float
    c: float
    d: float
    z: float
    w: float


@lru_cache(maxsize=256)
def height_scale_k(s: Setup) -> int:
    """Least k > 0 with k*l1 and k*l2 integral."""
    return lcm(s.l1.denominator, s.l2.denominator)


@lru_cache(maxsize=256)
def integer_exponents(s: Setup) -> tuple[int, int, int, int]:
    """(k, k*l1, k*l2, k*(l1 + n*l2)) as Python ints."""
    k = height_scale_k(s)
    e1, e2 = k * s.l1, k * s.l2
    return k, int(e1), int(e2), int(k * s.m)


def height_power(s: Setup, x) -> int:
    """H_L(x)**k as an exact integer, k = height_scale_k(s)."""
    _, e1, e2, em = integer_exponents(s)
    M = max(abs(x[0]), abs(x[2]), abs(x[4]))
    N = max(abs(x[1]), abs(x[3]))
    return max(M**e1 * N**e2, M**em * abs(x[5]) ** e2)


def height_leq(s: Setup, x, B: int) -> bool:
    """Exact test H_L(x) <= B via H_L(x)**k <= B**k."""
    if B <= 0:
        raise ValueError("height bound must be positive")
    k = integer_exponents(s)[0]
    return height_power(s, x) <= B**k


def height_real(s: Setup, x) -> float:
    l1, l2 = float(s.l1), float(s.l2)
    M = max(abs(x[0]), abs(x[2]), abs(x[4]))
    N = max(abs(x[1]), abs(x[3]))
    return max(M**l1 * N**l2, M ** (l1 + s.n * l2) * abs(x[5]) ** l2)


def satisfies_torsor(n: int, x) -> bool:
    a, b, c, d, z, w = x
    return a * d - b * c == z ** (n + 1) * w


def is_integral_point(s: Setup, x) -> bool:
    """Torsor equation, coprimality, and the unit conditions on the boundary."""
    a, b, c, d, z, w = x
    if not satisfies_torsor(s.n, x):
        return False
    if gcd(gcd(a, c), z) != 1 or gcd(gcd(b, d), w) != 1:
        return False
    if abs(w) != 1:
        return False
    if s.boundary is Boundary.DW_DZ and abs(z) != 1:
        return False
    return True


def involution(n: int, x) -> CoxTuple:
    """Action of (-1, 1) in G_m^2(Z): fixes w, negates the degree-(1,0) coordinates."""
    a, b, c, d, z, w = x
    sign = (-1) ** n
    return CoxTuple(-a, sign * b, -c, sign * d, -z, w)
