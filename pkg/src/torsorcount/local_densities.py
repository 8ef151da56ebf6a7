"""Point counts over F_p and the p-adic density factors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import is_prime, primes_upto
from .counting import ConsistencyError
from .invariants import Boundary, Setup

MAX_BRUTE_P = 97


@dataclass(frozen=True)
class LocalDensity:
    p: int
    u_count: int
    x_count: int
    lambda_exponent: int
    omega: Fraction


def _check(n: int, p: int) -> None:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if n < 2:
        raise ValueError("n must be >= 2")
    if p > MAX_BRUTE_P:
        raise ValueError(f"brute-force torsor count capped at p <= {MAX_BRUTE_P}")


def _torsor_counts(n: int, p: int) -> tuple[int, int, int]:
    """Torsor points over F_p: (all, with w != 0, with w != 0 and z != 0).

    Loops over (z, w) and, vectorized, over (a, c); the (b, d) solutions of
    a*d - c*b = z^(n+1)*w are counted directly: p when (a, c) != 0, p^2 or 0
    when the left side vanishes identically.
    """
    ac = np.arange(p)
    A, C = np.meshgrid(ac, ac, indexing="ij")
    form_nonzero = (A != 0) | (C != 0)
    total = with_w = with_wz = 0
    for z in range(p):
        zp = pow(z, n + 1, p)
        for w in range(p):
            rhs = (zp * w) % p
            sols = np.where(form_nonzero, p, p * p if rhs == 0 else 0)
            if w == 0 and rhs == 0:
                sols = sols - 1  # (b, d, w) = 0 is not on the torsor
            if z == 0:
                sols = np.where(form_nonzero, sols, 0)  # (a, c, z) = 0 likewise
            k = int(sols.sum())
            total += k
            if w:
                with_w += k
                if z:
                    with_wz += k
    return total, with_w, with_wz


def torsor_count_fp(n: int, p: int) -> int:
    _check(n, p)
    return _torsor_counts(n, p)[0]


def x_count_fp(n: int, p: int) -> int:
    total = torsor_count_fp(n, p)
    q, r = divmod(total, (p - 1) ** 2)
    if r:
        raise ConsistencyError(f"torsor count {total} not divisible by (p-1)^2 at p={p}")
    return q


def x_count_closed_form(p: int) -> int:
    return p**3 + 2 * p**2 + 2 * p + 1


def u_count_fp(s: Setup, p: int) -> int:
    """Points of the integral model away from the boundary, two ways."""
    _check(s.n, p)
    total, with_w, with_wz = _torsor_counts(s.n, p)
    x = total // (p - 1) ** 2
    if s.boundary is Boundary.DW:
        by_exclusion = x - (p + 1) ** 2
        direct = with_w
    else:
        by_exclusion = x - 2 * (p + 1) ** 2 + (p + 1)
        direct = with_wz
    direct, rem = divmod(direct, (p - 1) ** 2)
    if rem or direct != by_exclusion:
        raise ConsistencyError(
            f"u_count mismatch at p={p}: inclusion-exclusion {by_exclusion}, direct {direct}")
    return by_exclusion


def rank_pic_u(s: Setup) -> int:
    # Pic X = Z^2 modulo the classes of the removed boundary components
    return 1 if s.boundary is Boundary.DW else 0


def omega_p(s: Setup, p: int) -> LocalDensity:
    u = u_count_fp(s, p)
    lam = rank_pic_u(s)
    omega = (1 - Fraction(1, p)) ** lam * Fraction(u, p**3)
    return LocalDensity(p, u, x_count_fp(s.n, p), lam, omega)


def euler_product(s: Setup | None = None) -> float:
    """prod_p (1 - p^-2) = 1/zeta(2); identical for every setup."""
    return 6 / math.pi**2


def truncated_euler(s: Setup | None, P: int) -> float:
    if P < 2:
        raise ValueError("truncation point must be >= 2")
    ps = primes_upto(P).astype(float)
    return float(np.prod(1.0 - ps**-2))
