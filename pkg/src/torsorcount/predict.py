"""Predicted leading constants and the comparison against exact counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .archimedean import InfiniteMeasure, omega_inf
from .arith import fmt_fraction, totients_upto
from .counting import FiberKey, enumerate_count, fiber_constant, fiber_count, fiber_vector
from .invariants import (AdjointType, Boundary, Setup, a_invariant, adjoint_type,
                         alpha_invariant, b_invariant)
from .local_densities import euler_product

TAIL_SAFETY = 4
TAIL_RTOL = 1e-3
M_START = 64
M_CAP = 2**22


class UnsupportedPrediction(ValueError):
    pass


@dataclass(frozen=True)
class Constituents:
    alpha: Optional[Fraction] = None
    omega_inf: Optional[float] = None
    omega_inf_error: Optional[float] = None
    euler: float = 0.0
    fiber_sum: Optional[float] = None
    truncation_M: Optional[int] = None
    tail_bound: Optional[float] = None
    converged: Optional[bool] = None


@dataclass(frozen=True)
class Prediction:
    a: Fraction
    b: int
    c_leading: Optional[float]
    constituents: Constituents = field(default_factory=Constituents)
    supported: bool = True
    reason: Optional[str] = None

    def as_dict(self) -> dict:
        k = self.constituents
        real = lambda x: None if x is None else float(f"{x:.12g}")  # noqa: E731
        return {
            "supported": self.supported,
            "reason": self.reason,
            "c": real(self.c_leading),
            "alpha": None if k.alpha is None else fmt_fraction(k.alpha),
            "omega_inf": real(k.omega_inf),
            "omega_inf_error": None if k.omega_inf_error is None else float(f"{k.omega_inf_error:.3g}"),
            "euler": real(k.euler),
            "fiber_sum": real(k.fiber_sum),
            "truncation_M": k.truncation_M,
            "tail_bound": None if k.tail_bound is None else float(f"{k.tail_bound:.3g}"),
            "converged": k.converged,
        }


# --- moving case: sum of fiber constants ------------------------------------------------


def _shell_sum(s: Setup, X: int, phi: np.ndarray) -> float:
    """Sum of c'(X_t) over fibers t with max(|a|, |c|, |z|) <= X.

    Groups vectors by m = max(|a|, |c|): there are 8 phi(m) primitive pairs
    with that maximum. For D = D_w each fiber is carried by two vectors
    (a, c, z) and (-a, -c, -z), so the vector sum of c' is halved; for
    D = D_w + D_z the fibers are the primitive (a, c) with z = 1.
    """
    r = float(s.l1 / s.l2)
    m = np.arange(1, X + 1, dtype=float)
    ph = phi[1:X + 1].astype(float)
    mr = m ** (-r)
    if s.boundary is Boundary.DW_DZ:
        return float(np.sum(16.0 * ph * mr / m))
    tail_z = np.cumsum(mr[::-1])[::-1] - mr  # sum over m < k <= X of k^-r
    return float(np.sum(8.0 * ph / m * ((2 * m + 1) * mr + 2 * tail_z)))


def tail_bound(s: Setup, X: int) -> float:
    """Bound for the fibers with max(|a|, |c|, |z|) > X, times TAIL_SAFETY."""
    r = float(s.l1 / s.l2)
    if s.boundary is Boundary.DW_DZ:
        bound = 16.0 * X ** (1 - r) / (r - 1)
    else:
        bound = X ** (2 - r) * (8 * (3 + 2 / (r - 1)) / (r - 2) + 16 / (r - 1))
    return TAIL_SAFETY * bound


def fiber_sum(s: Setup, M_cap: int = M_CAP) -> tuple[float, int, float, bool]:
    """(partial sum, truncation M, tail bound at M, converged)."""
    X = M_START
    phi = totients_upto(2 * X)
    total = _shell_sum(s, X, phi)
    while True:
        tail = tail_bound(s, X)
        if 2 * X > M_cap:
            return total, X, tail, False
        if len(phi) <= 2 * X:
            phi = totients_upto(2 * X)
        doubled = _shell_sum(s, 2 * X, phi)
        if tail < TAIL_RTOL * total and abs(doubled - total) <= tail:
            return total, X, tail, True
        X, total = 2 * X, doubled


def fiber_sum_direct(s: Setup, X: int) -> float:
    """Fiber-indexed sum of c'(X_t) for max(|a|, |c|, |z|) <= X, by enumeration."""
    keys = set()
    zs = range(-X, X + 1) if s.boundary is Boundary.DW else (1,)
    for a in range(-X, X + 1):
        for c in range(-X, X + 1):
            if math.gcd(a, c) != 1:
                continue
            for z in zs:
                keys.add(FiberKey.of(a, c, z))
    return math.fsum(fiber_constant(s, t) for t in sorted(keys))


# --- leading constant ---------------------------------------------------------------------

_CACHE: dict = {}


def _leading_constant(s: Setup, workers: int) -> Prediction:
    a = a_invariant(s)
    b = b_invariant(s)
    euler = euler_product(s)
    if adjoint_type(s) is AdjointType.MOVING:
        total, X, tail, ok = fiber_sum(s)
        return Prediction(a, b, total, Constituents(
            euler=euler, fiber_sum=total, truncation_M=X, tail_bound=tail, converged=ok))
    try:
        om = omega_inf(s, workers=workers)
    except InfiniteMeasure as exc:
        return Prediction(a, b, None, Constituents(euler=euler), supported=False, reason=str(exc))
    alpha = alpha_invariant(s)
    c = float(alpha / a) * om.value * euler
    return Prediction(a, b, c, Constituents(
        alpha=alpha, omega_inf=om.value, omega_inf_error=om.est_error, euler=euler))


def leading_constant(s: Setup, workers: int = 1) -> Prediction:
    if s not in _CACHE:
        _CACHE[s] = _leading_constant(s, workers)
    return _CACHE[s]


def predicted_count(s: Setup, B: float, workers: int = 1) -> float:
    if B < 2:
        raise ValueError("the asymptotic is stated for B >= 2")
    pred = leading_constant(s, workers)
    if not pred.supported:
        raise UnsupportedPrediction(pred.reason or "no prediction for this configuration")
    return pred.c_leading * B ** float(pred.a) * math.log(B) ** (pred.b - 1)


# --- comparison tables -----------------------------------------------------------------------


@dataclass(frozen=True)
class CompareRow:
    B: int
    exact: int
    predicted: Optional[float]
    ratio: Optional[float]
    supported: bool = True

    def as_dict(self) -> dict:
        real = lambda x: None if x is None else float(f"{x:.12g}")  # noqa: E731
        return {"B": self.B, "exact": self.exact, "predicted": real(self.predicted),
                "ratio": real(self.ratio), "supported": self.supported}


def _check_Bs(Bs) -> list[int]:
    Bs = [int(x) for x in Bs]
    if not Bs:
        raise ValueError("need at least one B")
    if any(x < 1 for x in Bs):
        raise ValueError("B values must be positive")
    if Bs != sorted(Bs):
        raise ValueError("B values must be ascending")
    return Bs


def compare(s: Setup, Bs, workers: int = 1) -> list[CompareRow]:
    Bs = _check_Bs(Bs)
    pred = leading_constant(s, workers)
    rows = []
    for B in Bs:
        exact = enumerate_count(s, B, workers).count
        if not pred.supported:
            rows.append(CompareRow(B, exact, None, None, supported=False))
            continue
        p = predicted_count(s, B)
        rows.append(CompareRow(B, exact, p, exact / p))
    return rows


def fiber_report(s: Setup, t: FiberKey, Bs) -> list[CompareRow]:
    """Fiber count against c'(X_t) * B^(1/l2)."""
    Bs = _check_Bs(Bs)
    if adjoint_type(s) is not AdjointType.MOVING:
        raise ValueError("fiber reports need a moving adjoint divisor")
    if fiber_vector(s, t) is None:
        raise ValueError(f"fiber {t} is empty")
    c = fiber_constant(s, t)
    rows = []
    for B in Bs:
        p = c * B ** (1 / float(s.l2))
        exact = fiber_count(s, t, B)
        rows.append(CompareRow(B, exact, p, exact / p))
    return rows
