"""Bessel and Hankel functions of integer order and complex argument."""

from .engine import (
    BesselConvergenceError,
    BesselDomainError,
    BesselEval,
    BesselOverflowError,
    BesselTable,
    bessel_jy,
    bessel_table,
)
from .scaled import ScaledArray

__all__ = [
    "BesselConvergenceError",
    "BesselDomainError",
    "BesselEval",
    "BesselOverflowError",
    "BesselTable",
    "ScaledArray",
    "bessel_jy",
    "bessel_table",
]
