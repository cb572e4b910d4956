"""Arbitrary-precision reference values for the Bessel engine.

Single orders come straight from the power series for J_q and the
logarithmic series for Y_q, summed in mpmath with enough guard digits to
absorb the cancellation between terms.  Every evaluation is repeated
with ten more digits and the two runs must agree to the requested
precision.

Whole order ranges are built in the same arithmetic: J by backward
recurrence seeded with series values at the top two orders, Y by forward
recurrence from series Y_0 and Y_1.  Both directions are the stable ones
for their function, so the range values carry the same digits as the
seeds at a fraction of the cost of one series per order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
from mpmath import mp

from .engine import BesselDomainError, BesselEval

__all__ = ["OracleConvergenceError", "OracleRange", "bessel_oracle", "bessel_oracle_mp", "bessel_oracle_range"]

_MAX_TERMS = 20000


class OracleConvergenceError(ArithmeticError):
    """A series did not settle; carries the last partial sums for diagnosis."""

    def __init__(self, message: str, partial_sums: list):
        super().__init__(f"{message}; last partial sums: {[mpmath.nstr(s, 12) for s in partial_sums]}")
        self.partial_sums = partial_sums


def _check(z: complex, digits: int) -> None:
    if not 20 <= digits <= 60:
        raise ValueError(f"digits must lie in [20, 60], got {digits}")
    if complex(z) == 0:
        raise BesselDomainError("Bessel functions of integer order are singular at z = 0")


def _guard_digits(q: int, z: complex) -> int:
    """Decimal digits lost to cancellation in the J and Y series at (q, z)."""
    x = abs(complex(z)) / 2.0
    if x == 0:
        return 0
    lx = math.log(x)
    # largest J-series term relative to the leading one, log scale
    best = -math.inf
    m_peak = max(0, int(-q / 2 + math.sqrt(q * q / 4 + x * x)))
    for m in (m_peak - 1, m_peak, m_peak + 1):
        if m >= 0:
            best = max(best, (2 * m + q) * lx - math.lgamma(m + 1) - math.lgamma(m + q + 1))
    # the value itself is at least ~ exp(-2x)-ish smaller than that; spend the whole gap
    return int(best / math.log(10) + 2 * x / math.log(10)) + 10 if best > 0 else 10


def _j_series(q: int, z, tol) -> mpmath.mpc:
    half = z / 2
    term = half**q / mpmath.factorial(q)
    total = term
    w = -half * half
    recent = []
    for m in range(1, _MAX_TERMS):
        term = term * w / (m * (m + q))
        total += term
        if abs(term) <= tol * abs(total) and m > abs(half):
            return total
        recent = (recent + [total])[-4:]
    raise OracleConvergenceError(f"J_{q} series at z={z} did not converge", recent)


def _y_series(n: int, z, tol) -> mpmath.mpc:
    """Y_n from the logarithmic series (integer order, A&S 9.1.11)."""
    half = z / 2
    w = half * half
    head = mpmath.mpc(0)
    if n > 0:
        term = mpmath.factorial(n - 1)
        for k in range(n):
            head += term
            if k < n - 1:
                term = term * w / ((k + 1) * (n - k - 1))
        head = -head * half ** (-n) / mpmath.pi
    jn = _j_series(n, z, tol)
    logpart = 2 / mpmath.pi * mpmath.log(half) * jn
    term = half**n / mpmath.factorial(n)
    psi_a = -mpmath.euler
    psi_b = mpmath.harmonic(n) - mpmath.euler
    tail = term * (psi_a + psi_b)
    recent = []
    for k in range(1, _MAX_TERMS):
        term = term * (-w) / (k * (n + k))
        psi_a += mpmath.mpf(1) / k
        psi_b += mpmath.mpf(1) / (n + k)
        piece = term * (psi_a + psi_b)
        tail += piece
        if abs(piece) <= tol * (abs(tail) + abs(logpart) + abs(head)) and k > abs(half):
            return head + logpart - tail / mpmath.pi
        recent = (recent + [tail])[-4:]
    raise OracleConvergenceError(f"Y_{n} series at z={z} did not converge", recent)


def _single(order: int, z: complex, dps: int):
    with mp.workdps(dps):
        zz = mpmath.mpc(z)
        tol = mpmath.mpf(10) ** (-dps)
        q = abs(order)
        j0, j1 = _j_series(q, zz, tol), _j_series(q + 1, zz, tol)
        y0, y1 = _y_series(q, zz, tol), _y_series(q + 1, zz, tol)
        jp = q / zz * j0 - j1
        yp = q / zz * y0 - y1
        return j0, y0, jp, yp


def _agree(a, b, digits: int) -> bool:
    scale = max(abs(a), abs(b))
    return scale == 0 or abs(a - b) <= mpmath.mpf(10) ** (-digits) * scale


def bessel_oracle(order: int, z: complex, digits: int = 30) -> BesselEval:
    """J, Y, J', Y' at one integer order, correct to ``digits`` significant digits.

    The result fields are rounded to Python complex; use
    :func:`bessel_oracle_mp` when the full precision is needed.
    """
    vals = bessel_oracle_mp(order, z, digits)
    return BesselEval(int(order), complex(z), *(complex(v) for v in vals))


def bessel_oracle_mp(order: int, z: complex, digits: int = 30) -> tuple:
    """Like :func:`bessel_oracle` but returns mpmath numbers at ``digits`` precision."""
    _check(z, digits)
    q = abs(int(order))
    base = digits + _guard_digits(q + 1, z) + 5
    first = _single(q, z, base)
    second = _single(q, z, base + 10)
    for a, b in zip(first, second):
        if not _agree(a, b, digits):
            raise OracleConvergenceError(
                f"order {order} at z={z!r} not stable between {base} and {base + 10} digits", [a, b]
            )
    sign = -1 if (order < 0 and q % 2) else 1
    with mp.workdps(digits):
        return tuple(sign * (+v) for v in second)


@dataclass(frozen=True)
class OracleRange:
    """mpmath values for orders 0..max_order at one argument."""

    z: complex
    digits: int
    j: list
    y: list
    jp: list
    yp: list


def bessel_oracle_range(z: complex, max_order: int, digits: int = 30) -> OracleRange:
    """Reference J, Y, J', Y' for every order 0..max_order at argument ``z``."""
    _check(z, digits)
    top = max_order + 1
    dps = digits + max(_guard_digits(top, z), _guard_digits(1, z)) + 15
    with mp.workdps(dps):
        zz = mpmath.mpc(z)
        tol = mpmath.mpf(10) ** (-dps)
        two_over_z = 2 / zz
        j = [mpmath.mpc(0)] * (top + 1)
        j[top] = _j_series(top, zz, tol)
        j[top - 1] = _j_series(top - 1, zz, tol)
        for n in range(top - 1, 0, -1):
            j[n - 1] = n * two_over_z * j[n] - j[n + 1]
        y = [mpmath.mpc(0)] * (top + 1)
        y[0] = _y_series(0, zz, tol)
        y[1] = _y_series(1, zz, tol)
        for n in range(1, top):
            y[n + 1] = n * two_over_z * y[n] - y[n - 1]
        jp = [-j[1]] + [j[n - 1] - n / zz * j[n] for n in range(1, top)]
        yp = [-y[1]] + [y[n - 1] - n / zz * y[n] for n in range(1, top)]
    return OracleRange(complex(z), digits, j[:top], y[:top], jp, yp)
