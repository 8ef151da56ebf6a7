import itertools
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from torsorcount.invariants import make_setup
from torsorcount.local_densities import (euler_product, omega_p, rank_pic_u, torsor_count_fp,
                                         truncated_euler, u_count_fp, x_count_closed_form,
                                         x_count_fp)


def torsor_count_6d(n, p):
    """Independent oracle: scan all of F_p^6."""
    r = range(p)
    return sum(1 for a, b, c, d, z, w in itertools.product(r, repeat=6)
               if (a * d - b * c - pow(z, n + 1) * w) % p == 0
               and (a, c, z) != (0, 0, 0) and (b, d, w) != (0, 0, 0))


@pytest.mark.parametrize("n,p", [(2, 2), (2, 3), (3, 2), (4, 3), (2, 5)])
def test_torsor_count_vs_full_scan(n, p):
    assert torsor_count_fp(n, p) == torsor_count_6d(n, p)


def test_torsor_examples():
    assert torsor_count_fp(2, 2) == 21
    assert torsor_count_fp(2, 3) == 208
    assert torsor_count_fp(3, 2) == 21


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("p", [2, 3, 5, 7, 11])
def test_x_count_closed_form(n, p):
    assert x_count_fp(n, p) == x_count_closed_form(p) == p**3 + 2 * p**2 + 2 * p + 1


def test_x_count_examples():
    assert x_count_fp(2, 2) == 21
    assert x_count_fp(2, 5) == 186
    assert x_count_fp(4, 3) == 52


def test_u_count_examples():
    assert u_count_fp(make_setup(2, "w", 1, 1), 2) == 12
    assert u_count_fp(make_setup(2, "wz", 1, 1), 2) == 6
    assert u_count_fp(make_setup(3, "wz", 1, 1), 5) == 120


@pytest.mark.parametrize("bd", ["w", "wz"])
@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_omega_p(bd, p):
    s = make_setup(2, bd, 1, 1)
    d = omega_p(s, p)
    want_u = p**3 + p**2 if bd == "w" else p**3 - p
    assert d.u_count == want_u
    assert d.lambda_exponent == rank_pic_u(s) == (1 if bd == "w" else 0)
    assert d.omega == 1 - F(1, p**2)
    assert d.omega == (1 - F(1, p)) ** d.lambda_exponent * F(d.u_count, p**3)


def test_omega_examples_and_errors():
    assert omega_p(make_setup(2, "w", 1, 1), 2).omega == F(3, 4)
    assert omega_p(make_setup(2, "wz", 1, 1), 3).omega == F(8, 9)
    assert omega_p(make_setup(5, "wz", 3, 1), 7).omega == F(48, 49)
    with pytest.raises(ValueError):
        torsor_count_fp(2, 4)
    with pytest.raises(ValueError):
        torsor_count_fp(2, 101)


def test_euler():
    assert euler_product() == pytest.approx(0.6079271018540267, rel=1e-15)
    assert truncated_euler(None, 2) == 0.75
    assert abs(truncated_euler(None, 10**4) - 6 / math.pi**2) < 1e-3
    with pytest.raises(ValueError):
        truncated_euler(None, 1)


@given(st.integers(2, 3000), st.integers(1, 3000))
def test_truncated_euler_decreasing_and_bounded(P, step):
    a, b = truncated_euler(None, P), truncated_euler(None, P + step)
    assert b <= a
    assert b >= 6 / math.pi**2
