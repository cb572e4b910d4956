"""Complex arrays with a separate base-2 exponent per entry.

Bessel values at orders far beyond the argument under- or overflow a
double (``J_2000(400)`` is about ``1e-1130``), while the products that
enter operator eigenvalues (``J_q * H_q``) stay of order one.  Carrying
the exponent separately lets those products be formed exactly before
converting back to ``complex``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# exponents outside this window cannot be represented by ldexp on a double
_MIN_EXP = -1100
_MAX_EXP = 1100


def _ldexp_complex(m: np.ndarray, e: np.ndarray) -> np.ndarray:
    e = np.clip(e, _MIN_EXP, _MAX_EXP).astype(np.int64)
    # out-of-range magnitudes become 0 or inf by design
    with np.errstate(over="ignore", under="ignore"):
        return np.ldexp(m.real, e) + 1j * np.ldexp(m.imag, e)


@dataclass(frozen=True)
class ScaledArray:
    """Value ``mant * 2**exp``, elementwise.

    ``mant`` is normalised so that ``max(|re|, |im|)`` lies in ``[0.5, 1)``
    (or is exactly zero, with ``exp == 0``).
    """

    mant: np.ndarray
    exp: np.ndarray

    @classmethod
    def from_parts(cls, mant, exp) -> "ScaledArray":
        mant = np.asarray(mant, dtype=complex)
        exp = np.broadcast_to(np.asarray(exp, dtype=np.int64), mant.shape).copy()
        size = np.maximum(np.abs(mant.real), np.abs(mant.imag))
        if not np.all(np.isfinite(size)):
            raise OverflowError("non-finite mantissa in scaled value")
        _, shift = np.frexp(size)
        shift = np.where(size > 0, shift, 0).astype(np.int64)
        mant = _ldexp_complex(mant, -shift)
        exp = np.where(size > 0, exp + shift, 0)
        return cls(mant, exp)

    @classmethod
    def from_complex(cls, values) -> "ScaledArray":
        values = np.asarray(values, dtype=complex)
        return cls.from_parts(values, np.zeros(values.shape, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.mant)

    def __getitem__(self, idx) -> "ScaledArray":
        return ScaledArray(np.atleast_1d(self.mant[idx]), np.atleast_1d(self.exp[idx]))

    @property
    def shape(self):
        return self.mant.shape

    def to_complex(self) -> np.ndarray:
        """Convert to ``complex``; underflow gives 0, overflow gives inf."""
        return _ldexp_complex(self.mant, self.exp)

    def log2_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(np.abs(self.mant)) + self.exp

    def __mul__(self, other) -> "ScaledArray":
        if isinstance(other, ScaledArray):
            return ScaledArray.from_parts(self.mant * other.mant, self.exp + other.exp)
        return ScaledArray.from_parts(self.mant * np.asarray(other, dtype=complex), self.exp)

    __rmul__ = __mul__

    def __neg__(self) -> "ScaledArray":
        return ScaledArray(-self.mant, self.exp)

    def reciprocal(self) -> "ScaledArray":
        if np.any(self.mant == 0):
            raise ZeroDivisionError("reciprocal of a zero scaled value")
        return ScaledArray.from_parts(1.0 / self.mant, -self.exp)

    def __truediv__(self, other) -> "ScaledArray":
        if isinstance(other, ScaledArray):
            return self * other.reciprocal()
        return ScaledArray.from_parts(self.mant / np.asarray(other, dtype=complex), self.exp)

    def __add__(self, other: "ScaledArray") -> "ScaledArray":
        top = np.maximum(self.exp, other.exp)
        # a zero operand carries exp 0 and must not drag the other one down
        top = np.where(self.mant == 0, other.exp, np.where(other.mant == 0, self.exp, top))
        a = _ldexp_complex(self.mant, self.exp - top)
        b = _ldexp_complex(other.mant, other.exp - top)
        return ScaledArray.from_parts(a + b, top)

    def __sub__(self, other: "ScaledArray") -> "ScaledArray":
        return self + (-other)
