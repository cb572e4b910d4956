import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from cylbem.specfun import BesselDomainError, ScaledArray, bessel_jy, bessel_table
from cylbem.specfun.oracle import bessel_oracle, bessel_oracle_range


def _maclaurin_j(q, z, dps=40):
    # reference power series, independent of the oracle module
    with mpmath.mp.workdps(dps):
        z = mpmath.mpc(z)
        total = mpmath.mpc(0)
        m = 0
        while True:
            term = (-1) ** m * (z / 2) ** (2 * m + q) / (mpmath.factorial(m) * mpmath.factorial(m + q))
            total += term
            if abs(term) < mpmath.mpf(10) ** (-dps) * max(abs(total), 1e-300) and m > 5:
                return complex(total)
            m += 1


def test_j0_of_two_matches_power_series():
    assert bessel_jy(0, 2.0).j == pytest.approx(_maclaurin_j(0, 2.0), rel=1e-13)


def test_j1_small_argument_leading_term():
    assert bessel_jy(1, 1e-6).j == pytest.approx(5e-7, rel=1e-12)


def test_wronskian_complex_argument():
    z = 3.0 + 0.4j
    b = bessel_jy(5, z)
    w = b.j * b.yp - b.jp * b.y
    assert abs(w - 2 / (math.pi * z)) / abs(2 / (math.pi * z)) < 1e-10


def test_hankel_is_j_minus_jy():
    b = bessel_jy(7, 12.5)
    assert b.h2 == b.j - 1j * b.y
    assert b.h2p == b.jp - 1j * b.yp


def test_zero_argument_is_a_domain_error():
    with pytest.raises(BesselDomainError):
        bessel_jy(3, 0.0)


def test_oracle_j0_of_one():
    assert bessel_oracle(0, 1.0, 30).j == pytest.approx(0.7651976865579666, rel=1e-15)


def test_oracle_rejects_zero_argument():
    with pytest.raises((BesselDomainError, ValueError)):
        bessel_oracle(3, 0.0, 30)


def test_oracle_wronskian_is_tight():
    with mpmath.mp.workdps(40):
        from cylbem.specfun.oracle import bessel_oracle_mp

        j, y, jp, yp = bessel_oracle_mp(2, 10.0, 30)[:4]
        w = j * yp - jp * y
        assert abs(w - 2 / (mpmath.pi * 10)) < 1e-25


def test_oracle_self_consistency_30_vs_40_digits():
    a = bessel_oracle(0, 1.0, 30)
    b = bessel_oracle(0, 1.0, 40)
    assert abs(a.j - b.j) < 1e-16


@pytest.mark.parametrize("ka", [1.0, 10.0, 100.0, 1000.0])
@pytest.mark.parametrize("complex_arg", [False, True])
def test_engine_against_oracle_on_recurrence_grid(ka, complex_arg):
    z = ka - 0.4j * ka ** (1 / 3) if complex_arg else ka
    top = math.ceil(1.5 * ka)
    tab = bessel_table(z, top)
    orc = bessel_oracle_range(z, top)
    step = max(1, top // 60)
    for name in ("j", "y", "jp", "yp"):
        arr = getattr(tab, name)
        ref = getattr(orc, name)
        with mpmath.mp.workdps(30):
            for q in range(0, top + 1, step):
                v = mpmath.mpc(complex(arr.mant[q])) * mpmath.ldexp(1, int(arr.exp[q]))
                assert float(abs(v - ref[q]) / abs(ref[q])) < 1e-10, (name, q)


def test_reflection_for_negative_orders():
    tab = bessel_table(7.3, 10)
    for q in range(1, 10):
        pos, neg = tab.at(q), tab.at(-q)
        sign = (-1) ** q
        assert neg.j == pytest.approx(sign * pos.j)
        assert neg.yp == pytest.approx(sign * pos.yp)


def test_derivative_recurrence_consistency():
    z = 25.0 - 1.1j
    for q in (1, 10, 30):
        a, b, c = bessel_jy(q - 1, z), bessel_jy(q, z), bessel_jy(q + 1, z)
        assert abs(b.jp - (a.j - c.j) / 2) < 1e-12 * max(abs(b.jp), abs(b.j))


def test_derivative_matches_finite_difference():
    z = 40.0 - 0.9j
    h = 1e-5 * abs(z)
    for q in (0, 20, 45):
        fd = (bessel_jy(q, z + h).j - bessel_jy(q, z - h).j) / (2 * h)
        assert abs(fd - bessel_jy(q, z).jp) / abs(bessel_jy(q, z).jp) < 1e-6


def test_agrees_with_scipy_for_real_arguments():
    for z in (0.5, 3.0, 80.0, 700.0):
        tab = bessel_table(z, 200)
        q = np.arange(0, 201, 7)
        jv = special.jv(q, z)
        yv = special.yv(q, z)
        ok = np.isfinite(yv) & (np.abs(jv) > 1e-250)
        np.testing.assert_allclose(tab.j[q].to_complex()[ok].real, jv[ok], rtol=1e-9, atol=0)
        oky = np.isfinite(yv)
        np.testing.assert_allclose(tab.y[q].to_complex()[oky].real, yv[oky], rtol=1e-9, atol=0)


def test_large_orders_stay_representable():
    tab = bessel_table(10.0, 1200)
    assert np.all(np.isfinite(tab.j.mant)) and np.all(np.isfinite(tab.y.mant))
    assert tab.j.log2_abs()[-1] < -3000
    assert tab.y.log2_abs()[-1] > 3000


@given(
    re=st.floats(min_value=0.5, max_value=5000.0),
    im=st.floats(min_value=-5.0, max_value=0.0),
    q=st.integers(min_value=0, max_value=400),
)
def test_wronskian_property(re, im, q):
    z = complex(re, max(im, -0.5 * re))
    tab = bessel_table(z, q)
    j, y, jp, yp = (getattr(tab, n)[q] for n in ("j", "y", "jp", "yp"))
    w = (j * yp - jp * y).to_complex()[0]
    ref = 2 / (math.pi * z)
    assert abs(w - ref) / abs(ref) < 1e-10


@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
def test_scaled_array_round_trip(values):
    arr = ScaledArray.from_complex(np.array(values, dtype=complex))
    np.testing.assert_allclose(arr.to_complex(), values, rtol=1e-15, atol=0)
