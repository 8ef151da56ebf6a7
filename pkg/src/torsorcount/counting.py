"""Exact counts of integral points of bounded height.

Points are counted on the universal torsor with w = 1 (and z = 1 when the
boundary is D_w + D_z). For D_w every point then has exactly two
representatives, related by the sign involution on (a, c, z).

Two independent routes are provided: `enumerate_count` counts the (b, d)
solutions of each (a, c, z) cell in closed form, and `naive_count` scans b
(or d) explicitly and tests every candidate tuple with the height module.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from functools import partial
from math import gcd
from typing import NamedTuple

from ._parallel import pmap
from .arith import count_congruent, iroot, linear_range
from .height import CoxTuple, height_leq, integer_exponents, is_integral_point
from .invariants import AdjointType, Boundary, Setup, adjoint_type

DEFAULT_WORK_BUDGET = 10**9


class WorkBudgetExceeded(RuntimeError):
    pass


class ConsistencyError(RuntimeError):
    """An internal cross-check failed; indicates a bug, not bad input."""


@dataclass(frozen=True)
class CountResult:
    B: int
    count: int
    raw_tuple_count: int
    elapsed: float

    def as_dict(self, timing: bool = True) -> dict:
        out = {"B": self.B, "count": self.count, "raw_tuple_count": self.raw_tuple_count}
        if timing:
            out["elapsed"] = round(self.elapsed, 6)
        return out


class FiberKey(NamedTuple):
    """A point (a : c : z) of P^2, sign-normalized (first nonzero entry positive)."""

    a: int
    c: int
    z: int

    @classmethod
    def of(cls, a: int, c: int, z: int) -> "FiberKey":
        if a == c == z == 0:
            raise ValueError("(0 : 0 : 0) is not a point of P^2")
        first = next(v for v in (a, c, z) if v != 0)
        sign = 1 if first > 0 else -1
        return cls(sign * a, sign * c, sign * z)

    @classmethod
    def parse(cls, text: str) -> "FiberKey":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"fiber key must look like a:c:z, got {text!r}")
        return cls.of(*(int(p) for p in parts))

    def __str__(self) -> str:
        return f"{self.a}:{self.c}:{self.z}"


# --- exact bounds ---------------------------------------------------------


class _Bounds(NamedTuple):
    Bk: int  # B**k
    e1: int  # k*l1
    e2: int  # k*l2
    em: int  # k*(l1 + n*l2)
    m_max: int  # largest M with M**em <= B**k


def _bounds(s: Setup, B: int) -> _Bounds:
    if B < 1:
        raise ValueError("height bound must be a positive integer")
    k, e1, e2, em = integer_exponents(s)
    Bk = B**k
    return _Bounds(Bk, e1, e2, em, iroot(Bk, em))


def _t_table(bd: _Bounds) -> list[int]:
    """T[M] = largest N with M**e1 * N**e2 <= B**k, for 1 <= M <= m_max."""
    return [0] + [iroot(bd.Bk // M**bd.e1, bd.e2) for M in range(1, bd.m_max + 1)]


def cell_count(n: int, a: int, c: int, z: int, T: int, inv_c: int | None = None) -> int:
    """Number of (b, d) with |b|, |d| <= T and a*d - b*c = z**(n+1).

    Closed form: b runs through one residue class mod |a| inside an interval.
    Assumes gcd(a, c) = 1. `inv_c` may carry c^{-1} mod |a| to save work.
    """
    q = z ** (n + 1)
    if a == 0:
        # -b*c = q, so b is forced and d is free
        if c == 0 or q % c:
            return 0
        return 2 * T + 1 if abs(q // c) <= T else 0
    m = abs(a)
    if c == 0:
        if q % a or abs(q) > T * m:
            return 0
        return 2 * T + 1
    lo, hi = linear_range(c, q, T * m)
    lo, hi = max(lo, -T), min(hi, T)
    if m == 1:
        return max(0, hi - lo + 1)
    if inv_c is None:
        inv_c = pow(c, -1, m)
    r = (-q * inv_c) % m
    return count_congruent(lo, hi, r, m)


def _z_values(s: Setup, m_max: int) -> range | tuple[int, ...]:
    if s.boundary is Boundary.DW_DZ:
        return (1,)
    return range(-m_max, m_max + 1)


def _fast_chunk(s: Setup, B: int, a_values: tuple[int, ...]) -> int:
    bd = _bounds(s, B)
    T = _t_table(bd)
    n, m_max = s.n, bd.m_max
    zs = [(z, abs(z)) for z in _z_values(s, m_max)]
    total = 0
    for a in a_values:
        am = abs(a)
        for c in range(-m_max, m_max + 1):
            if gcd(a, c) != 1:
                continue
            mac = max(am, abs(c))
            inv_c = pow(c, -1, am) if am > 1 else None
            for z, za in zs:
                M = mac if mac >= za else za
                total += cell_count(n, a, c, z, T[M], inv_c)
    return total


def _a_partition(m_max: int, parts: int) -> list[tuple[int, ...]]:
    avals = list(range(-m_max, m_max + 1))
    parts = max(1, min(parts, len(avals)))
    return [tuple(avals[i::parts]) for i in range(parts)]


def _normalize(s: Setup, raw: int) -> int:
    if s.boundary is Boundary.DW:
        if raw % 2:
            raise ConsistencyError(f"odd raw tuple count {raw} for D = D_w")
        return raw // 2
    return raw


def enumerate_count(s: Setup, B: int, workers: int = 1) -> CountResult:
    """N(B), the number of integral points with H_L <= B, by closed-form cell counts."""
    t0 = time.perf_counter()
    bd = _bounds(s, B)
    chunks = _a_partition(bd.m_max, workers)
    raw = sum(pmap(partial(_fast_chunk, s, B), chunks, workers))
    return CountResult(B, _normalize(s, raw), raw, time.perf_counter() - t0)


# --- naive oracle -----------------------------------------------------------


def _naive_cells(s: Setup, bd: _Bounds, a_values):
    zs = (-1, 1) if s.boundary is Boundary.DW_DZ else range(-bd.m_max, bd.m_max + 1)
    for a in a_values:
        for c in range(-bd.m_max, bd.m_max + 1):
            for z in zs:
                M = max(abs(a), abs(c), abs(z))
                if M == 0 or M**bd.em > bd.Bk:
                    continue
                yield a, c, z, iroot(bd.Bk // M**bd.e1, bd.e2)


def naive_work(s: Setup, B: int) -> int:
    bd = _bounds(s, B)
    return sum(2 * T + 1 for *_, T in _naive_cells(s, bd, range(-bd.m_max, bd.m_max + 1)))


def _naive_chunk(s: Setup, B: int, a_values) -> tuple[int, int]:
    """Hits with w = 1, split by sign of z (only meaningful for D_w + D_z)."""
    bd = _bounds(s, B)
    n = s.n
    pos = neg = 0
    for a, c, z, T in _naive_cells(s, bd, a_values):
        q = z ** (n + 1)
        cands = []
        if a != 0:
            for b in range(-T, T + 1):
                num = b * c + q
                if num % a == 0:
                    cands.append(CoxTuple(a, b, c, num // a, z, 1))
        elif c != 0:
            # a = 0: the equation reads -b*c = q and d is unconstrained
            if q % c == 0:
                b = -q // c
                cands.extend(CoxTuple(0, b, c, d, z, 1) for d in range(-T, T + 1))
        # a = c = 0 would need q = 0, i.e. (a, c, z) = 0, which is excluded
        for x in cands:
            if is_integral_point(s, x) and height_leq(s, x, B):
                if z < 0:
                    neg += 1
                else:
                    pos += 1
    return pos, neg


def naive_count(s: Setup, B: int, work_budget: int = DEFAULT_WORK_BUDGET,
                workers: int = 1) -> CountResult:
    """Oracle for `enumerate_count`: scan b (or d) and test every tuple directly.

    The scan box is |a|, |c|, |z| <= B^(1/(l1+n l2)) and, per cell,
    |b| <= (B / M^l1)^(1/l2); d is solved from the torsor equation.
    """
    t0 = time.perf_counter()
    work = naive_work(s, B)
    if work > work_budget:
        raise WorkBudgetExceeded(
            f"naive scan needs {work} tuple tests, budget is {work_budget}")
    bd = _bounds(s, B)
    parts = pmap(partial(_naive_chunk, s, B), _a_partition(bd.m_max, workers), workers)
    pos = sum(p for p, _ in parts)
    neg = sum(q for _, q in parts)
    if s.boundary is Boundary.DW_DZ:
        # z -> -z is the free involution here, so both signs must agree
        if pos != neg:
            raise ConsistencyError(f"z = 1 and z = -1 counts differ: {pos} vs {neg}")
        raw = pos
    else:
        raw = pos + neg
    return CountResult(B, _normalize(s, raw), raw, time.perf_counter() - t0)


# --- fibers of (a : b : c : d : z : w) -> (a : c : z) ------------------------


def fiber_vector(s: Setup, t: FiberKey) -> tuple[int, int, int] | None:
    """The torsor vector (a, c, z) counted for fiber t, or None if the fiber is empty."""
    if gcd(t.a, t.c) != 1:
        return None
    if s.boundary is Boundary.DW_DZ:
        if abs(t.z) != 1:
            return None
        return t.a * t.z, t.c * t.z, 1
    return t.a, t.c, t.z


def fiber_count(s: Setup, t: FiberKey, B: int) -> int:
    """Integral points x with (a : c : z) = t and H_L(x) <= B."""
    vec = fiber_vector(s, t)
    if vec is None:
        return 0
    bd = _bounds(s, B)
    a, c, z = vec
    M = max(abs(a), abs(c), abs(z))
    if M**bd.em > bd.Bk:
        return 0
    T = iroot(bd.Bk // M**bd.e1, bd.e2)
    return cell_count(s.n, a, c, z, T)


def fibers_within(s: Setup, B: int) -> list[FiberKey]:
    """Every nonempty fiber that can carry a point of height <= B, sorted."""
    m_max = _bounds(s, B).m_max
    keys = set()
    for a in range(-m_max, m_max + 1):
        for c in range(-m_max, m_max + 1):
            if gcd(a, c) != 1:
                continue
            for z in _z_values(s, m_max):
                keys.add(FiberKey.of(a, c, z))
    return sorted(keys)


# --- one-dimensional volumes ---------------------------------------------------


def _interval_length(a: float, c: float, q: float, Z: float) -> float:
    """Length of {b : |b| <= Z, |b*c + q| <= Z*|a|}."""
    if c == 0:
        return 2 * Z if abs(q) <= Z * abs(a) else 0.0
    u = (Z * abs(a) - q) / c
    v = (-Z * abs(a) - q) / c
    lo, hi = max(-Z, min(u, v)), min(Z, max(u, v))
    return max(0.0, hi - lo)


def volume_V(s: Setup, a: float, c: float, z: float, B: float) -> float:
    """V(a, c, z; B): the real volume approximating a fiber count."""
    if a == 0 and c == 0:
        raise ValueError("volume_V needs (a, c) != (0, 0)")
    if a == 0:
        a, c = c, a
    l1, l2 = float(s.l1), float(s.l2)
    M = max(abs(a), abs(c), abs(z))
    Z = B ** (1 / l2) * M ** (-l1 / l2)
    return _interval_length(a, c, z ** (s.n + 1), Z) / abs(a)


def volume_Vprime(s: Setup, a: float, c: float, z: float) -> float:
    """B-independent leading coefficient of V(a, c, z; B) in B^(1/l2)."""
    if a == 0 and c == 0:
        raise ValueError("volume_Vprime needs (a, c) != (0, 0)")
    r = float(s.l1 / s.l2)
    M = max(abs(a), abs(c), abs(z))
    return 2 * M ** (-r) / max(abs(a), abs(c))


def fiber_constant(s: Setup, t: FiberKey) -> float:
    """c'(X_t): the fiber count is c'(X_t) * B^(1/l2) + O(1)."""
    if adjoint_type(s) is not AdjointType.MOVING:
        raise ValueError("fiber constants are defined only for a moving adjoint divisor")
    vec = fiber_vector(s, t)
    if vec is None:
        return 0.0
    return volume_Vprime(s, *vec)


__all__ = [
    "CountResult", "FiberKey", "WorkBudgetExceeded", "ConsistencyError",
    "enumerate_count", "naive_count", "naive_work", "fiber_count", "fibers_within",
    "fiber_vector", "cell_count", "volume_V", "volume_Vprime", "fiber_constant",
]
