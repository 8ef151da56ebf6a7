"""Exact invariants of a polarized member of the spherical threefold family.

Picard classes are written in the basis (class of z, class of w), i.e. the
Cox grading deg(a) = deg(c) = deg(z) = (1, 0), deg(b) = deg(d) = (n, 1),
deg(w) = (0, 1). A polarization (l1, l2) is the class L = (l1 + n*l2, l2).
Everything here is rational arithmetic; no floats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

from .arith import as_fraction, fmt_fraction


class Boundary(enum.Enum):
    DW = "w"  # D = D_w
    DW_DZ = "wz"  # D = D_w + D_z

    @classmethod
    def parse(cls, value: "Boundary | str") -> "Boundary":
        if isinstance(value, Boundary):
            return value
        for member in cls:
            if value in (member.value, member.name):
                return member
        raise ValueError(f"unknown boundary {value!r} (expected 'w' or 'wz')")


class AdjointType(enum.Enum):
    TRIVIAL = "TRIVIAL"
    RIGID = "RIGID"
    MOVING = "MOVING"


class PicClass(NamedTuple):
    d1: Fraction
    d2: Fraction

    def __add__(self, other):  # type: ignore[override]
        return PicClass(self.d1 + other.d1, self.d2 + other.d2)

    def scale(self, t) -> "PicClass":
        return PicClass(self.d1 * t, self.d2 * t)

    def is_zero(self) -> bool:
        return self.d1 == 0 and self.d2 == 0

    def render(self) -> list[str]:
        return [fmt_fraction(self.d1), fmt_fraction(self.d2)]


def anticanonical(n: int) -> PicClass:
    return PicClass(Fraction(n + 2), Fraction(2))


D_Z = PicClass(Fraction(1), Fraction(0))
D_W = PicClass(Fraction(0), Fraction(1))


@dataclass(frozen=True)
class Setup:
    """One family member: X_n with boundary D and polarization (l1, l2)."""

    n: int
    boundary: Boundary
    l1: Fraction
    l2: Fraction

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary.parse(self.boundary))
        object.__setattr__(self, "l1", as_fraction(self.l1))
        object.__setattr__(self, "l2", as_fraction(self.l2))
        if isinstance(self.n, bool) or not isinstance(self.n, int):
            raise TypeError("n must be an integer")
        if self.n < 2:
            raise ValueError(f"n must be >= 2, got {self.n}")
        if self.l1 <= 0 or self.l2 <= 0:
            raise ValueError("polarization must satisfy l1 > 0 and l2 > 0")
        # Fraction hashing is slow and setups key several per-call caches
        object.__setattr__(self, "_hash", hash((self.n, self.boundary, self.l1, self.l2)))

    def __hash__(self) -> int:
        return self._hash

    @property
    def L(self) -> PicClass:
        return PicClass(self.l1 + self.n * self.l2, self.l2)

    @property
    def m(self) -> Fraction:
        """l1 + n*l2: the exponent of max(|a|,|c|,|z|) in the second height term."""
        return self.l1 + self.n * self.l2

    @property
    def boundary_class(self) -> PicClass:
        return D_W if self.boundary is Boundary.DW else D_W + D_Z

    def scaled(self, k) -> "Setup":
        k = as_fraction(k)
        return Setup(self.n, self.boundary, self.l1 * k, self.l2 * k)

    def label(self) -> str:
        return (f"n={self.n} D={self.boundary.value} "
                f"l1={fmt_fraction(self.l1)} l2={fmt_fraction(self.l2)}")


def make_setup(n: int, boundary, l1, l2) -> Setup:
    return Setup(n, Boundary.parse(boundary), as_fraction(l1), as_fraction(l2))


def a_invariant(s: Setup) -> Fraction:
    shift = s.n + 2 if s.boundary is Boundary.DW else s.n + 1
    return max(1 / s.l2, shift / s.m)


def adjoint_class(s: Setup) -> PicClass:
    """E = K + D + a*L, computed literally in the Picard lattice."""
    return anticanonical(s.n).scale(-1) + s.boundary_class + s.L.scale(a_invariant(s))


def adjoint_type(s: Setup) -> AdjointType:
    e = adjoint_class(s)
    if e.is_zero():
        return AdjointType.TRIVIAL
    if e.d1 > 0:
        return AdjointType.MOVING
    return AdjointType.RIGID


def e_invariant(s: Setup) -> Fraction:
    if adjoint_type(s) is AdjointType.MOVING:
        raise ValueError("e undefined for moving adjoint divisor")
    gap = 2 * s.l2 - s.l1 if s.boundary is Boundary.DW else s.l2 - s.l1
    return gap / s.m


def b_invariant(s: Setup) -> int:
    return 2 if adjoint_class(s).is_zero() else 1


def alpha_invariant(s: Setup) -> Fraction:
    if adjoint_type(s) is AdjointType.MOVING:
        raise ValueError("alpha is per-fiber; use fiber_constant")
    if b_invariant(s) == 2:
        return 1 / (s.m * s.l2)
    return 1 / s.m


def delta_saving(s: Setup) -> Optional[Fraction]:
    """Power saving in the error term, or None when b = 2."""
    kind = adjoint_type(s)
    if kind is AdjointType.TRIVIAL:
        return None
    if kind is AdjointType.MOVING:
        shift = 2 if s.boundary is Boundary.DW else 1
        return (s.l1 / s.l2 - shift) / s.m
    if s.boundary is Boundary.DW:
        return min(s.l1, 2 * s.l2 - s.l1) / (s.l2 * s.m)
    # rigid, D = D_w + D_z: error O(B^(1/l2)) against main term B^a
    return a_invariant(s) - 1 / s.l2


@dataclass(frozen=True)
class InvariantBundle:
    a: Fraction
    e: Optional[Fraction]
    b: int
    alpha: Optional[Fraction]
    adjoint: PicClass
    adjoint_type: AdjointType
    delta: Optional[Fraction]

    def as_dict(self) -> dict:
        opt = lambda x: None if x is None else fmt_fraction(x)  # noqa: E731
        return {
            "a": fmt_fraction(self.a),
            "e": opt(self.e),
            "b": self.b,
            "alpha": opt(self.alpha),
            "adjoint": self.adjoint.render(),
            "adjoint_type": self.adjoint_type.value,
            "delta": opt(self.delta),
        }


def invariants(s: Setup) -> InvariantBundle:
    kind = adjoint_type(s)
    moving = kind is AdjointType.MOVING
    return InvariantBundle(
        a=a_invariant(s),
        e=None if moving else e_invariant(s),
        b=b_invariant(s),
        alpha=None if moving else alpha_invariant(s),
        adjoint=adjoint_class(s),
        adjoint_type=kind,
        delta=delta_saving(s),
    )
