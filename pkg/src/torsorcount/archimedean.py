"""Archimedean volumes: the real density omega_inf and the model volume W(B).

Both quantities are computed by an adaptive route and by a Monte Carlo
route. omega_inf and W(B) are themselves two independent descriptions of the
same constant (W(B) = alpha * omega_inf / a * B^a (log B)^(b-1)), which
`omega_inf_crosscheck` tests.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import partial
from typing import Optional

import numpy as np
from scipy import integrate

from ._parallel import pmap
from .invariants import (AdjointType, Boundary, Setup, a_invariant, adjoint_type,
                         alpha_invariant, b_invariant, e_invariant)

ADAPTIVE = "ADAPTIVE"
MONTE_CARLO = "MONTE_CARLO"
DEFAULT_SAMPLES = 10**7
BATCH = 250_000


class InfiniteMeasure(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureReport:
    value: float
    est_error: float
    method: str
    samples_or_cells: int
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        return {
            "value": float(f"{self.value:.12g}"),
            "est_error": float(f"{self.est_error:.3g}"),
            "method": self.method,
            "samples_or_cells": self.samples_or_cells,
            "seed": self.seed,
        }


def _require_finite(s: Setup) -> None:
    if s.boundary is Boundary.DW and s.l1 >= 2 * s.l2:
        raise InfiniteMeasure("measure infinite for this polarization (D = D_w needs l1 < 2 l2)")
    if s.boundary is Boundary.DW_DZ and s.l1 > s.l2:
        raise InfiniteMeasure("measure infinite for this polarization (D = D_w + D_z needs l1 <= l2)")


def _quad(f, lo, hi, epsrel, **kw):
    # an infinite end goes to QUADPACK's own (1 - t) / t compactification;
    # inner integrals of nested quads sometimes stop short of epsrel, which the
    # cross-route check bounds, so their warnings are not surfaced
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, lo, hi, epsabs=0.0, epsrel=epsrel, limit=200, **kw)


# --- closed-form b-integral ------------------------------------------------------


def _power_integral(al: float, be: float, u0: float, u1: float, s: float) -> float:
    """Integral over [u0, u1] of (al*x + be)^-s, positive there; one end may be infinite.

    Written through log1p/expm1 so nearly flat pieces (tiny al) do not cancel.
    """
    if math.isinf(u0) or math.isinf(u1):
        v = al * (u0 if math.isinf(u1) else u1) + be
        return v ** (1.0 - s) / (abs(al) * (s - 1.0))
    v0, v1 = al * u0 + be, al * u1 + be
    rel = al * (u1 - u0) / v0
    if abs(rel) > 0.5:
        return (v0 ** (1.0 - s) - v1 ** (1.0 - s)) / (al * (s - 1.0))
    return v0 ** (1.0 - s) * -math.expm1((1.0 - s) * math.log1p(rel)) / (al * (s - 1.0))


def _segment(al: float, be: float, x0: float, x1: float, G: float, s: float) -> float:
    """Integral over [x0, x1] of max(al*x + be, G)^-s, al*x + be >= 0 there."""
    if al == 0.0:
        return (x1 - x0) * max(be, G) ** (-s)
    cross = (G - be) / al
    if al > 0:
        flat = max(0.0, min(x1, cross) - x0)
        start = max(x0, cross)
        steep = _power_integral(al, be, start, x1, s) if start < x1 else 0.0
    else:
        flat = max(0.0, x1 - max(x0, cross))
        stop = min(x1, cross)
        steep = _power_integral(al, be, x0, stop, s) if stop > x0 else 0.0
    return flat * G ** (-s) + steep


def b_integral(c: float, q: float, G: float, s: float) -> float:
    """Integral over the real line of max(|b|, |c b + q|, G)^-s, for s > 1.

    Exact: the convex piecewise-linear max is split at its kinks and each
    linear piece is integrated in closed form.
    """
    kinks = {0.0}
    if c != 0:
        kinks.add(-q / c)
    if c != 1:
        kinks.add(q / (1.0 - c))
    if c != -1:
        kinks.add(-q / (1.0 + c))
    edges = [-math.inf, *sorted(kinks), math.inf]
    total = 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        if x0 == x1:
            continue
        if math.isinf(x0):
            mid = x1 - max(1.0, abs(x1))
        elif math.isinf(x1):
            mid = x0 + max(1.0, abs(x0))
        else:
            mid = 0.5 * (x0 + x1)
        v = c * mid + q
        if abs(mid) >= abs(v):
            al, be = (1.0, 0.0) if mid >= 0 else (-1.0, 0.0)
        else:
            al, be = (c, q) if v >= 0 else (-c, -q)
        total += _segment(al, be, x0, x1, G, s)
    return total


# --- omega_inf ------------------------------------------------------------------


class _Params:
    """Float copies of the exponents used by the integrands."""

    def __init__(self, s: Setup):
        self.n = s.n
        self.l1 = float(s.l1)
        self.l2 = float(s.l2)
        self.a = float(a_invariant(s))
        e = adjoint_type(s) is not AdjointType.MOVING and e_invariant(s)
        self.e = float(e) if e else 0.0


def _dw_fiber_density(c: float, z: float, p: _Params) -> float:
    """Integral over b of H(1, b, c, b c + z^(n+1), z, 1)^-a (w = 1/b chart)."""
    M = max(1.0, c, z)
    return M ** (-p.a * p.l1) * b_integral(c, z ** (p.n + 1), M**p.n, p.a * p.l2)


def _dw_z_slab(p: _Params, zr: tuple[float, float]) -> tuple[float, float, int]:
    def inner(z):
        edges = [0.0, 1.0] + ([z] if z > 1.0 else []) + [math.inf]
        return sum(_quad(_dw_fiber_density, lo, hi, 1e-6, args=(z, p))[0]
                   for lo, hi in zip(edges[:-1], edges[1:]))

    val, err, info = _quad(inner, zr[0], zr[1], 1e-5, full_output=1)[:3]
    return val, err, info["neval"]


def _dwdz_c_density(c: float, p: _Params) -> float:
    """Integral over w of |w|^(e-1) H(1, 1, c, c, 0, w)^-a, via |w| = u^(1/e)."""
    M = max(1.0, c)

    def f(u):
        w = u ** (1.0 / p.e)
        return max(M ** (p.l1 + p.l2), M ** (p.l1 + p.n * p.l2) * w**p.l2) ** (-p.a) / p.e

    kink = M ** (-(p.n - 1) * p.e)  # where M^(n-1) |w| = 1
    return _quad(f, 0.0, kink, 1e-9)[0] + _quad(f, kink, math.inf, 1e-9)[0]


def _dwdz_c_slab(p: _Params, cr: tuple[float, float]) -> tuple[float, float, int]:
    val, err, info = _quad(_dwdz_c_density, cr[0], cr[1], 1e-8, args=(p,), full_output=1)[:3]
    return val, err, info["neval"]


def _boundary_c_slab(p: _Params, cr: tuple[float, float]) -> tuple[float, float, int]:
    f = lambda c: max(1.0, c) ** (-p.a * (p.l1 + p.l2))  # noqa: E731  H(1,1,c,c,0,0)^-a
    val, err, info = _quad(f, cr[0], cr[1], 1e-10, full_output=1)[:3]
    return val, err, info["neval"]


SLABS = ((0.0, 1.0), (1.0, 2.0), (2.0, 8.0), (8.0, math.inf))


def _omega_adaptive(s: Setup, workers: int) -> QuadratureReport:
    p = _Params(s)
    if s.boundary is Boundary.DW:
        # w -> 1/b, then symmetry in the signs of c and z
        task, factor = partial(_dw_z_slab, p), 4.0
    elif s.l1 < s.l2:
        # prefactor 2, symmetry in the signs of c and w
        task, factor = partial(_dwdz_c_slab, p), 8.0
    else:
        task, factor = partial(_boundary_c_slab, p), 8.0
    parts = pmap(task, SLABS, workers)
    value = factor * sum(v for v, _, _ in parts)
    err = factor * sum(e for _, e, _ in parts)
    cells = sum(k for _, _, k in parts)
    return QuadratureReport(value, err, ADAPTIVE, cells)


def _mapped(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """x = t / (1 - |t|) on (-1, 1) and its Jacobian."""
    d = 1.0 - np.abs(t)
    return t / d, 1.0 / d**2


def _batch_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def _omega_mc_batch(s: Setup, seed: int, size: int, index: int) -> tuple[float, float]:
    p = _Params(s)
    rng = _batch_rng(seed, index)
    if s.boundary is Boundary.DW:
        t = rng.uniform(-1.0, 1.0, size=(size, 3))
        x, jac = _mapped(t)
        c, z, u = x[:, 0], x[:, 1], x[:, 2]
        w = np.sign(u) * np.abs(u) ** (1.0 / p.e)
        M = np.maximum(np.maximum(1.0, np.abs(c)), np.abs(z))
        N = np.maximum(1.0, np.abs(c + z ** (p.n + 1) * w))
        H = np.maximum(M**p.l1 * N**p.l2, M ** (p.l1 + p.n * p.l2) * np.abs(w) ** p.l2)
        vals = 8.0 * jac.prod(axis=1) * H ** (-p.a) / p.e
    elif s.l1 < s.l2:
        t = rng.uniform(-1.0, 1.0, size=(size, 2))
        x, jac = _mapped(t)
        c, u = x[:, 0], x[:, 1]
        w = np.abs(u) ** (1.0 / p.e)
        M = np.maximum(1.0, np.abs(c))
        H = np.maximum(M ** (p.l1 + p.l2), M ** (p.l1 + p.n * p.l2) * w**p.l2)
        vals = 2.0 * 4.0 * jac.prod(axis=1) * H ** (-p.a) / p.e
    else:
        t = rng.uniform(-1.0, 1.0, size=size)
        c, jac = _mapped(t)
        H = np.maximum(1.0, np.abs(c)) ** (p.l1 + p.l2)
        vals = 4.0 * 2.0 * jac * H ** (-p.a)
    return float(vals.sum()), float((vals * vals).sum())


def _mc_report(batch_fn, samples: int, seed: int, workers: int) -> QuadratureReport:
    sizes = [BATCH] * (samples // BATCH) + ([samples % BATCH] if samples % BATCH else [])
    parts = pmap(_BatchTask(batch_fn, sizes), range(len(sizes)), workers)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return QuadratureReport(mean, math.sqrt(var / samples), MONTE_CARLO, samples, seed)


class _BatchTask:
    """Picklable index -> batch adapter, so batches can run in worker processes."""

    def __init__(self, batch_fn, sizes):
        self.batch_fn = batch_fn
        self.sizes = sizes

    def __call__(self, index):
        return self.batch_fn(self.sizes[index], index)


# keyed without the worker count: results never depend on it
_CACHE: dict = {}


def _cached(key, compute):
    if key not in _CACHE:
        _CACHE[key] = compute()
    return _CACHE[key]


def omega_inf(s: Setup, method: str = ADAPTIVE, samples: int = DEFAULT_SAMPLES,
              seed: int = 0, workers: int = 1) -> QuadratureReport:
    """Total mass of the real Tamagawa measure for a rigid or trivial adjoint class."""
    _require_finite(s)
    method = method.upper()
    if method not in (ADAPTIVE, MONTE_CARLO):
        raise ValueError(f"unknown method {method!r}")
    if method == ADAPTIVE:
        return _cached(("omega", s, method), lambda: _omega_adaptive(s, workers))
    return _cached(("omega", s, method, samples, seed), lambda: _mc_report(
        partial(_omega_mc_batch, s, seed), samples, seed, workers))


# --- W(B), the model volume -----------------------------------------------------------


def _unit_V(a, c, z, n: int, r: float) -> np.ndarray:
    """V(a, c, z; 1) for arrays with a, c, z >= 0 (the integrand is even in each)."""
    M = np.maximum(np.maximum(a, c), z)
    Z = M ** (-r)
    q = z ** (n + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe_c = np.where(c > 0, c, 1.0)
        lo = np.where(c > 0, np.maximum(-Z, (-Z * a - q) / safe_c), -Z)
        hi = np.where(c > 0, np.minimum(Z, (Z * a - q) / safe_c), Z)
        length = np.clip(hi - lo, 0.0, None)
        length = np.where((c == 0) & (q > Z * a), 0.0, length)
        vol = np.where(a > 0, length / np.where(a > 0, a, 1.0), 0.0)
    return vol


def _cube_task(n: int, r: float, dim: int, box) -> tuple[float, float, int]:
    lo, hi = box
    if dim == 3:
        f = lambda x: _unit_V(x[:, 0], x[:, 1], x[:, 2], n, r)  # noqa: E731
    else:
        f = lambda x: _unit_V(x[:, 0], x[:, 1], np.zeros(len(x)), n, r)  # noqa: E731
    res = integrate.cubature(f, lo, hi, rtol=1e-4, atol=0.0, max_subdivisions=200_000)
    return float(res.estimate), float(res.error), int(res.subdivisions)


def _split_unit_cube(dim: int) -> list:
    halves = ((0.0, 0.5), (0.5, 1.0))
    boxes = [[]]
    for _ in range(dim):
        boxes = [b + [h] for b in boxes for h in halves]
    return [([h[0] for h in b], [h[1] for h in b]) for b in boxes]


def _w_scaled_adaptive(s: Setup, workers: int) -> QuadratureReport:
    """The B-free factor of W(B), adaptive route."""
    p = _Params(s)
    r = p.l1 / p.l2
    if s.boundary is Boundary.DW:
        # (1/2) * integral over [-1, 1]^3 of V(a, c, z; 1); V is even in a, c, z
        dim, factor = 3, 0.5 * 8.0
    elif s.l1 < s.l2:
        dim, factor = 2, 4.0
    else:
        # area of H(1, b, c, b c, 0, 0) <= 1 in the (b, c) plane
        parts = pmap(partial(_boundary_len_slab, p), SLABS, workers)
        area = 2.0 * sum(v for v, _, _ in parts)
        err = 2.0 * sum(e for _, e, _ in parts)
        return QuadratureReport(area, err, ADAPTIVE, sum(k for *_, k in parts))
    parts = pmap(partial(_cube_task, s.n, r, dim), _split_unit_cube(dim), workers)
    value = factor * sum(v for v, _, _ in parts)
    err = factor * sum(e for _, e, _ in parts)
    return QuadratureReport(value, err, ADAPTIVE, sum(k for *_, k in parts))


def _b_length(c: float, p: _Params) -> float:
    m = max(1.0, c)
    return 2.0 * (m ** (-p.l1)) ** (1.0 / p.l2) / m


def _boundary_len_slab(p: _Params, cr):
    val, err, info = _quad(_b_length, cr[0], cr[1], 1e-10, args=(p,), full_output=1)[:3]
    return val, err, info["neval"]


def _w_mc_batch(s: Setup, seed: int, size: int, index: int) -> tuple[float, float]:
    """Importance sampling in the sup-norm radius rho = max(|a|, |c|, |z|)."""
    p = _Params(s)
    r = p.l1 / p.l2
    rng = _batch_rng(seed, index)
    if s.boundary is Boundary.DW_DZ and s.l1 == s.l2:
        t = rng.uniform(-1.0, 1.0, size=size)
        c, jac = _mapped(t)
        m = np.maximum(1.0, np.abs(c))
        vals = 2.0 * jac * 2.0 * (m ** (-p.l1)) ** (1.0 / p.l2) / m
        return float(vals.sum()), float((vals * vals).sum())
    dim = 3 if s.boundary is Boundary.DW else 2
    # density of rho proportional to rho^(dim - 1 - gamma) on (0, 1]
    gamma = 1.0 + r
    power = dim - gamma
    rho = rng.uniform(0.0, 1.0, size=size) ** (1.0 / power)
    face = rng.integers(0, dim, size=size)
    pts = rng.uniform(0.0, 1.0, size=(size, dim))
    pts[np.arange(size), face] = 1.0
    pts *= rho[:, None]
    # sampling density on the positive orthant [0, 1]^dim, w.r.t. Lebesgue measure
    dens = power * rho ** (power - 1.0) / (dim * rho ** (dim - 1))
    z = pts[:, 2] if dim == 3 else np.zeros(size)
    v = _unit_V(pts[:, 0], pts[:, 1], z, p.n, r)
    # both cases reduce to 4 times the positive-orthant integral
    vals = 4.0 * v / dens
    return float(vals.sum()), float((vals * vals).sum())


def w_scale(s: Setup, B: float) -> float:
    """The B-dependence of W(B): B^a, times 2 log B / (l1 (n+1)) when b = 2."""
    a = float(a_invariant(s))
    if s.boundary is Boundary.DW_DZ and s.l1 == s.l2:
        return 2.0 * B**a * math.log(B) / (float(s.l1) * (s.n + 1))
    return B**a


def w_volume(s: Setup, B: float, method: str = ADAPTIVE, samples: int = DEFAULT_SAMPLES,
             seed: int = 0, workers: int = 1) -> QuadratureReport:
    """W(B): the real volume whose 1/zeta(2) multiple approximates N(B)."""
    if adjoint_type(s) is AdjointType.MOVING:
        raise ValueError("W(B) is only defined for a rigid or trivial adjoint class")
    _require_finite(s)
    if B <= 0 or (b_invariant(s) == 2 and B <= 1):
        raise ValueError("B must be positive, and exceed 1 when b = 2")
    method = method.upper()
    if method not in (ADAPTIVE, MONTE_CARLO):
        raise ValueError(f"unknown method {method!r}")
    if method == ADAPTIVE:
        base = _cached(("w", s, method), lambda: _w_scaled_adaptive(s, workers))
    else:
        base = _cached(("w", s, method, samples, seed), lambda: _mc_report(
            partial(_w_mc_batch, s, seed), samples, seed, workers))
    k = w_scale(s, B)
    return QuadratureReport(base.value * k, base.est_error * k, base.method,
                            base.samples_or_cells, base.seed)


@dataclass(frozen=True)
class CrosscheckReport:
    setup: str
    B_values: tuple
    w_normalized: tuple  # W(B) / (B^a (log B)^(b-1)) at each B
    alpha_omega_over_a: float
    rel_diff: float
    tolerance: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "setup": self.setup,
            "B_values": list(self.B_values),
            "w_normalized": [float(f"{v:.12g}") for v in self.w_normalized],
            "alpha_omega_over_a": float(f"{self.alpha_omega_over_a:.12g}"),
            "rel_diff": float(f"{self.rel_diff:.3g}"),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def omega_inf_crosscheck(s: Setup, B: float = 1e4, tolerance: float = 5e-3,
                         workers: int = 1) -> CrosscheckReport:
    """Compare W(B) / (B^a (log B)^(b-1)) against alpha * omega_inf / a."""
    _require_finite(s)
    a = float(a_invariant(s))
    b = b_invariant(s)
    rhs = float(alpha_invariant(s)) * omega_inf(s, workers=workers).value / a
    # with b = 2 a second B isolates the log B coefficient from O(B^a) terms
    Bs = (B,) if b == 1 else (B, B * B)
    lhs = tuple(w_volume(s, x, workers=workers).value / (x**a * math.log(x) ** (b - 1))
                for x in Bs)
    rel = max(abs(v - rhs) / rhs for v in lhs)
    return CrosscheckReport(s.label(), Bs, lhs, rhs, rel, tolerance, rel <= tolerance)
