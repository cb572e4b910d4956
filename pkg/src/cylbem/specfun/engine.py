"""Integer-order Bessel functions of complex argument.

J_q is obtained by Miller's backward recurrence and normalised with the
Wronskian ``J_1 Y_0 - J_0 Y_1 = 2 / (pi z)``.  Y_0 and Y_1 come from the
Neumann series (small |z|) or from Hankel's asymptotic expansion (large
|z|), and Y_q follows by forward recurrence, which is stable for Y.  Both
recurrences carry a base-2 exponent so orders far beyond |z| stay
representable, and run in extended precision so that the derivatives
keep their relative accuracy near their own zeros.  Results are rounded
to double mantissas at the end.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .scaled import ScaledArray

logger = logging.getLogger(__name__)

# recurrences and seeds run in x87 extended precision (64-bit mantissa);
# near zeros of Y'_q the seed error is amplified by |J'_q / Y'_q|
_LD = np.longdouble
_CLD = np.clongdouble
EULER_GAMMA = _LD("0.57721566490153286060651209008240243")
_PI = _LD("3.14159265358979323846264338327950288")
_RESCALE_AT = 2.0**500
_RESCALE_BY = -500
_SHRINK = _LD(2.0**_RESCALE_BY)
# below this |z| the Neumann series is used for the Y seeds
_NEUMANN_LIMIT = 20.0
_CASORATI_TOL = 1e-11
_MAX_ATTEMPTS = 4


class BesselDomainError(ValueError):
    """Argument outside the supported domain (z = 0 or Re z <= 0)."""


class BesselOverflowError(OverflowError):
    """A requested value cannot be represented as a double."""

    def __init__(self, order: int, z: complex, what: str):
        super().__init__(f"{what} of order {order} at z={z!r} is not representable as a double")
        self.order = order
        self.z = z


class BesselConvergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BesselEval:
    """J, Y and their argument derivatives at one (order, argument)."""

    order: int
    argument: complex
    j: complex
    y: complex
    jp: complex
    yp: complex

    @property
    def h2(self) -> complex:
        return self.j - 1j * self.y

    @property
    def h2p(self) -> complex:
        return self.jp - 1j * self.yp


@dataclass(frozen=True)
class BesselTable:
    """J_q, Y_q, J'_q, Y'_q for q = 0..max_order at a single argument."""

    z: complex
    max_order: int
    j: ScaledArray
    y: ScaledArray
    jp: ScaledArray
    yp: ScaledArray

    @property
    def h2(self) -> ScaledArray:
        return self.j - self.y * 1j

    @property
    def h2p(self) -> ScaledArray:
        return self.jp - self.yp * 1j

    def at(self, order: int) -> BesselEval:
        """Values at one order as plain complex numbers (reflection for q < 0)."""
        q = abs(int(order))
        if q > self.max_order:
            raise IndexError(f"order {order} beyond table limit {self.max_order}")
        sign = -1.0 if (order < 0 and q % 2) else 1.0
        out = []
        for name, arr in (("J", self.j), ("Y", self.y), ("J'", self.jp), ("Y'", self.yp)):
            v = complex(arr[q].to_complex()[0])
            if not cmath.isfinite(v):
                raise BesselOverflowError(order, self.z, name)
            out.append(sign * v)
        return BesselEval(int(order), self.z, *out)


def _check_argument(z: complex) -> complex:
    z = complex(z)
    if z == 0:
        raise BesselDomainError("Bessel functions of integer order are singular at z = 0")
    if z.real <= 0:
        raise BesselDomainError(f"argument {z!r} must have a positive real part")
    return z


def _hankel_asymptotic_y01(z: complex) -> tuple:
    """Y_0, Y_1 from Hankel's expansion; accurate for |z| >= 20."""
    zl = _CLD(z)
    res = []
    for nu in (0, 1):
        mu = 4.0 * nu * nu
        p = q = _CLD(0)
        term = _CLD(1)
        k = 0
        prev = math.inf
        while True:
            mag = float(abs(term))
            if mag > prev or mag < 1e-21:
                break
            prev = mag
            if k % 2 == 0:
                p += (-1) ** (k // 2) * term
            else:
                q += (-1) ** (k // 2) * term
            k += 1
            term = term * _LD(mu - (2 * k - 1) ** 2) / (_LD(8 * k) * zl)
        chi = zl - (_LD(nu) / 2 + _LD(0.25)) * _PI
        amp = np.sqrt(_LD(2) / (_PI * zl))
        res.append(amp * (p * np.sin(chi) + q * np.cos(chi)))
    return res[0], res[1]


def _miller(z: complex, start: int) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised backward recurrence from ``start``; returns mantissas and exponents."""
    mant = np.zeros(start + 1, dtype=_CLD)
    expo = np.zeros(start + 1, dtype=np.int64)
    two_over_z = _LD(2) / _CLD(z)
    upper, cur, e = _CLD(0), _CLD(1), 0
    mant[start], expo[start] = cur, e
    for q in range(start, 0, -1):
        lower = q * two_over_z * cur - upper
        upper, cur = cur, lower
        if abs(cur.real) + abs(cur.imag) > _RESCALE_AT:
            cur = _SHRINK * cur
            upper = _SHRINK * upper
            e -= _RESCALE_BY
        mant[q - 1], expo[q - 1] = cur, e
    return mant, expo


def _forward_y(z: complex, y0, y1, top: int) -> tuple[np.ndarray, np.ndarray]:
    mant = np.zeros(top + 1, dtype=_CLD)
    expo = np.zeros(top + 1, dtype=np.int64)
    mant[0] = y0
    if top >= 1:
        mant[1] = y1
    two_over_z = _LD(2) / _CLD(z)
    prev, cur, e = _CLD(y0), _CLD(y1), 0
    for q in range(1, top):
        nxt = q * two_over_z * cur - prev
        prev, cur = cur, nxt
        if abs(cur.real) + abs(cur.imag) > _RESCALE_AT:
            cur = _SHRINK * cur
            prev = _SHRINK * prev
            e -= _RESCALE_BY
        mant[q + 1], expo[q + 1] = cur, e
    return mant, expo


def _ldexp_ld(m: np.ndarray, e: np.ndarray) -> np.ndarray:
    e = np.asarray(e).clip(-16000, 16000).astype(np.int32)
    return np.ldexp(m.real, e) + 1j * np.ldexp(m.imag, e)


def _derivative(mant: np.ndarray, expo: np.ndarray, z: complex) -> tuple[np.ndarray, np.ndarray]:
    """f'_q = f_{q-1} - (q/z) f_q, with f'_0 = -f_1; extended precision, exponent of f_q."""
    n = len(mant)
    out = np.empty(n, dtype=_CLD)
    out_e = expo.copy()
    out[0], out_e[0] = -mant[1], expo[1]
    q = np.arange(1, n).astype(_LD)
    lower = _ldexp_ld(mant[:-1], expo[:-1] - expo[1:])
    out[1:] = lower - (q / _CLD(z)) * mant[1:]
    return out, out_e


def _scaled(mant: np.ndarray, expo: np.ndarray) -> ScaledArray:
    """Round extended-precision values to a double-mantissa ScaledArray."""
    size = np.maximum(np.abs(mant.real), np.abs(mant.imag))
    _, shift = np.frexp(size)
    shift = np.where(size > 0, shift, 0).astype(np.int64)
    m = _ldexp_ld(mant, -shift).astype(complex)
    return ScaledArray.from_parts(m, np.where(size > 0, expo + shift, 0))


def _table(z: complex, max_order: int, margin: int) -> tuple[BesselTable, float]:
    start = max(max_order + 1, int(math.ceil(abs(z)))) + margin
    jm, je = _miller(z, start)
    # common scale for the low orders used by the seeds / normalisation
    ref = je[0]
    j_low = _ldexp_ld(jm, je - ref)
    zl = _CLD(z)

    if abs(z) < _NEUMANN_LIMIT:
        # Neumann series for Y_0, Y_1 in terms of the unnormalised J.  Both seeds
        # scale with the unknown constant, so the Wronskian fixes its square and
        # the sum rule J_0 + 2 sum J_2k = 1 picks the sign.
        lg = np.log(zl / 2) + EULER_GAMMA
        k = np.arange(1, (start - 1) // 2 + 1)
        sgn = np.where(k % 2, -1, 1).astype(_LD)
        kl = k.astype(_LD)
        even = j_low[2 * k]
        s0 = np.sum(sgn * even / kl)
        s1 = np.sum(sgn * (j_low[2 * k - 1] - j_low[2 * k + 1]) / kl)
        y0_u = (2 / _PI) * lg * j_low[0] - (4 / _PI) * s0
        y1_u = (2 / _PI) * lg * j_low[1] + (2 / _PI) * s1 - (2 / (_PI * zl)) * j_low[0]
        norm = np.sqrt((2 / (_PI * zl)) / (j_low[1] * y0_u - j_low[0] * y1_u))
        total = j_low[0] + 2 * np.sum(even)
        if abs(norm * total - 1) > abs(norm * total + 1):
            norm = -norm
        y0, y1 = norm * y0_u, norm * y1_u
    else:
        y0, y1 = _hankel_asymptotic_y01(z)
        norm = (2 / (_PI * zl)) / (j_low[1] * y0 - j_low[0] * y1)
    top = max_order + 2
    jmant, jexp = jm[:top] * norm, je[:top] - ref
    ymant, yexp = _forward_y(z, y0, y1, max_order + 1)
    jarr, yarr = _scaled(jmant, jexp), _scaled(ymant, yexp)

    # Casorati check J_{q+1} Y_q - J_q Y_{q+1} = 2/(pi z) over the whole table
    cas = (jarr[1:] * yarr[:-1]) - (jarr[:-1] * yarr[1:])
    resid = float(np.max(np.abs(cas.to_complex() * (math.pi * z / 2.0) - 1.0)))

    n = max_order + 1
    jp = _scaled(*_derivative(jmant, jexp, z))
    yp = _scaled(*_derivative(ymant, yexp, z))
    table = BesselTable(z, max_order, jarr[:n], yarr[:n], jp[:n], yp[:n])
    return table, resid


@lru_cache(maxsize=128)
def bessel_table(z: complex, max_order: int) -> BesselTable:
    """J, Y, J', Y' for every order 0..max_order at argument ``z``."""
    z = _check_argument(z)
    if max_order < 0:
        raise ValueError("max_order must be non-negative")
    # 10 + 2 sqrt|z| leaves ~1e-10 errors in the Neumann seeds near |z| = 20
    margin = int(math.ceil(15 + 3 * math.sqrt(abs(z))))
    for _ in range(_MAX_ATTEMPTS):
        table, resid = _table(z, max(max_order, 1), margin)
        if resid < _CASORATI_TOL:
            if max_order == 0:
                table = BesselTable(z, 0, table.j[:1], table.y[:1], table.jp[:1], table.yp[:1])
            return table
        logger.debug("Casorati residual %.2e at z=%r, margin %d; doubling", resid, z, margin)
        margin *= 2
    raise BesselConvergenceError(
        f"Bessel recurrence failed the Wronskian check at z={z!r} (residual {resid:.2e})"
    )


def bessel_jy(order: int, z: complex) -> BesselEval:
    """J_q(z), Y_q(z), J'_q(z), Y'_q(z) for one integer order.

    Negative orders use ``f_{-q} = (-1)^q f_q``.
    """
    q = abs(int(order))
    return bessel_table(_check_argument(z), q).at(int(order))
