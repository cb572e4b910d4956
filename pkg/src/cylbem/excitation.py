"""Mie data for a plane wave hitting the PEC cylinder.

The incident wave travels along +x, so on the boundary

    exp(-j ka cos(phi)) = sum_q j^-q J_q(ka) exp(-j q phi).

Every coefficient below follows from this expansion: the exact surface
currents ``U_q``, the far-field coefficients ``R_q`` and the Fourier modes
of the right-hand sides after testing with the pyramid basis.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import pyramid_fourier_coeff
from .spectra import Polarization, ProblemConfig, _table


class Field(enum.Enum):
    """Tangential incident-field components tested on the boundary."""

    E_z = "E_z"
    H_t = "H_t"
    E_t = "E_t"
    H_z = "H_z"


def _j_power(q: np.ndarray) -> np.ndarray:
    """``j^-q`` for integer q, exact."""
    return np.array([1, -1j, -1, 1j])[np.mod(q, 4)]


def _bessel_pieces(cfg: ProblemConfig, q: np.ndarray):
    aq = np.abs(q)
    tab = _table(complex(cfg.ka), int(aq.max()) if aq.size else 0)
    # reflection sign for negative orders
    sign = np.where((q < 0) & (aq % 2 == 1), -1.0, 1.0)
    return tab, aq, sign


def mie_current_coeff(pol: Polarization, q, cfg: ProblemConfig):
    """Exact surface-current mode ``U_q``.

    ``U_q^TM = 2 j^-q / (pi eta ka H_q(ka))`` and
    ``U_q^TE = 2 j^-q / (pi eta ka H'_q(ka))``.
    """
    qa = np.atleast_1d(np.asarray(q, dtype=np.int64))
    tab, aq, sign = _bessel_pieces(cfg, qa)
    h = tab.h2[aq] if pol is Polarization.TM else tab.h2p[aq]
    inv = h.reciprocal().to_complex() * sign
    out = 2 * _j_power(qa) * inv / (math.pi * cfg.eta * cfg.ka)
    return complex(out[0]) if np.ndim(q) == 0 else out


def mie_scattering_coeff(pol: Polarization, q, cfg: ProblemConfig):
    """Far-field mode ``R_q = J_q / H_q`` (TM) or ``J'_q / H'_q`` (TE)."""
    qa = np.atleast_1d(np.asarray(q, dtype=np.int64))
    tab, aq, _ = _bessel_pieces(cfg, qa)
    if pol is Polarization.TM:
        out = (tab.j[aq] / tab.h2[aq]).to_complex()
    else:
        out = (tab.jp[aq] / tab.h2p[aq]).to_complex()
    return complex(out[0]) if np.ndim(q) == 0 else out


def field_mode(fld: Field, q, cfg: ProblemConfig):
    """Fourier coefficient of the untested incident field on the boundary."""
    qa = np.atleast_1d(np.asarray(q, dtype=np.int64))
    tab, aq, sign = _bessel_pieces(cfg, qa)
    if fld in (Field.E_z, Field.H_z):
        b = tab.j[aq].to_complex() * sign
    else:
        b = tab.jp[aq].to_complex() * sign
    out = _j_power(qa) * b
    if fld in (Field.H_t, Field.H_z):
        out = out / (1j * cfg.eta)
    return complex(out[0]) if np.ndim(q) == 0 else out


def rhs_modal_coeff(fld: Field, q, cfg: ProblemConfig, harmonics: int = 0):
    """Fourier mode of the pyramid-tested right-hand side.

    The tested vector ``(1/h) int f_n F`` has modes ``c_q F_-q`` where
    ``c_q`` is :func:`field_mode`.  On the discrete mesh the modes
    ``q + sN`` fold onto ``q``; ``harmonics`` keeps ``|s| <= harmonics``
    of them (0 gives the single-term form).
    """
    qa = np.atleast_1d(np.asarray(q, dtype=np.int64))
    total = np.zeros(qa.shape, dtype=complex)
    for s in range(-harmonics, harmonics + 1):
        p = qa + s * cfg.N
        total += field_mode(fld, p, cfg) * pyramid_fourier_coeff(-p, cfg.N)
    return complex(total[0]) if np.ndim(q) == 0 else total


def incident_field(fld: Field, phi: np.ndarray, cfg: ProblemConfig) -> np.ndarray:
    """Incident-field component on the boundary at polar angles ``phi``."""
    wave = np.exp(-1j * cfg.ka * np.cos(phi))
    if fld is Field.E_z:
        return wave
    if fld is Field.H_t:
        return -np.cos(phi) / cfg.eta * wave
    if fld is Field.E_t:
        return -1j * np.cos(phi) * wave
    return wave / (1j * cfg.eta)


@dataclass
class ModalSolution:
    """Exact and discrete current and far-field modes over the retained band."""

    polarization: Polarization
    modes: np.ndarray
    U: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    Uhat: np.ndarray | None = field(default=None, repr=False)
    Rhat: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def exact(cls, pol: Polarization, cfg: ProblemConfig) -> "ModalSolution":
        q = cfg.modes
        return cls(pol, q, mie_current_coeff(pol, q, cfg), mie_scattering_coeff(pol, q, cfg))

    @property
    def upsilon(self) -> np.ndarray:
        """``(Uhat - U) / U``."""
        if self.Uhat is None:
            raise ValueError("discrete current modes not set")
        return self.Uhat / self.U - 1.0

    @property
    def rho(self) -> np.ndarray:
        """``(Rhat - R) / R``."""
        if self.Rhat is None:
            raise ValueError("discrete scattering modes not set")
        return self.Rhat / self.R - 1.0


__all__ = [
    "Field",
    "ModalSolution",
    "field_mode",
    "incident_field",
    "mie_current_coeff",
    "mie_scattering_coeff",
    "rhs_modal_coeff",
]
