"""Current and scattering error of every formulation.

The discrete solution differs from the Mie current mode by mode:
``Uhat_q = (1 + upsilon_q) U_q``.  For the EFIE and MFIE

    upsilon_q = (F_q (1 - F_q) - E^A_q) / (1 + E_q),

where ``E`` is the spectral error of the system operator.  The Calderon
formulation averages the EFIE and MFIE coefficients with the discrete
eigenvalues of its two parts as weights.  Far-field modes pick up one
more projection factor: ``rho_q = F_q (upsilon_q + 1) - 1``.

Two engines produce the coefficients: ``predicted`` evaluates the closed
forms above, ``numerical`` solves the assembled BEM system.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import bem
from .bem import Family, Formulation
from .discretization import (
    discrete_eigenvalue,
    resonance_probe,
    pyramid_fourier_coeff,
    spectral_error,
)
from .spectra import (
    RESONANCE_THRESHOLD,
    Operator,
    OperatorKind,
    Polarization,
    ProblemConfig,
    Wavenumber,
    _table,
    filter_cutoff,
)

logger = logging.getLogger(__name__)

_HAZARD = 1e-300
ENGINES = ("predicted", "numerical")


class Norm(enum.Enum):
    L2 = "L2"
    Hs = "Hs"
    Hsk = "Hsk"
    P = "P"


class EmptySpectrumError(ArithmeticError):
    """Every weighted current mode underflowed; the quotient is undefined."""


class InsufficientPointsError(ValueError):
    """Too few unmasked samples for a slope fit."""


def _modes(q, cfg: ProblemConfig) -> np.ndarray:
    return cfg.modes if q is None else np.atleast_1d(np.asarray(q, dtype=np.int64))


def _shape(q, values):
    return complex(values[0]) if q is not None and np.ndim(q) == 0 else values


def _hazard(values: np.ndarray, q: np.ndarray, cfg: ProblemConfig, what: str) -> None:
    bad = np.abs(values) < _HAZARD
    if np.any(bad):
        raise bem.SingularModeError(what, q[bad].tolist(), cfg.ka)


def _simple_upsilon(form: Formulation, q: np.ndarray, cfg: ProblemConfig, harmonics) -> np.ndarray:
    err = spectral_error(form.system_operator, q, cfg, harmonics, filtered=form.filtered)
    _hazard(1 + err.total, q, cfg, f"1 + E of {form.value}")
    F = pyramid_fourier_coeff(q, cfg.N)
    ups = (F * (1 - F) - err.aliasing) / (1 + err.total)
    if form.filtered:
        # the filtered EFIE is solved only on the retained band
        ups = np.where(np.abs(q) <= filter_cutoff(cfg), ups, -1.0)
    return ups


def _calderon_parts(form: Formulation, q: np.ndarray, cfg: ProblemConfig, harmonics):
    """Discrete eigenvalues of the CEFIO and CMFIO parts of a CCFIE."""
    tm = form.polarization is Polarization.TM
    cefio = OperatorKind(Operator.TM_CEFIO if tm else Operator.TE_CEFIO)
    cmfio = OperatorKind(Operator.TM_CMFIO if tm else Operator.TE_CMFIO)
    lam_e = discrete_eigenvalue(cefio, q, cfg, harmonics, filtered=form.filtered)
    lam_m = discrete_eigenvalue(cmfio, q, cfg, harmonics, filtered=form.filtered)
    return np.atleast_1d(lam_e), np.atleast_1d(lam_m)


def _efie_of(form: Formulation) -> Formulation:
    # in the TE case the EFIE part carries the (possibly filtered) hypersingular operator
    if form.polarization is Polarization.TE and form.filtered:
        return Formulation.TE_EFIE_F
    return form.parts()[0]


def upsilon(form: Formulation, q=None, cfg: ProblemConfig | None = None, harmonics: int | None = None):
    """Predicted current error coefficient ``upsilon_q``.

    Parameters
    ----------
    form : Formulation
    q : int or array_like of int, optional
        Modes; defaults to the retained band of ``cfg``.
    cfg : ProblemConfig
    harmonics : int, optional
        Aliasing harmonics; defaults to ``cfg.harmonics``.

    Raises
    ------
    SingularModeError
        If a denominator has magnitude below 1e-300.
    """
    qa = _modes(q, cfg)
    if form.family is not Family.CCFIE:
        return _shape(q, _simple_upsilon(form, qa, cfg, harmonics))
    lam_e, lam_m = _calderon_parts(form, qa, cfg, harmonics)
    total = lam_e + lam_m
    _hazard(total, qa, cfg, f"CCFIO eigenvalue of {form.value}")
    ups_e = _simple_upsilon(_efie_of(form), qa, cfg, harmonics)
    ups_m = _simple_upsilon(form.parts()[1], qa, cfg, harmonics)
    return _shape(q, (lam_e * ups_e + lam_m * ups_m) / total)


def upsilon_two_term(form: Formulation, q=None, cfg: ProblemConfig | None = None,
                     harmonics: int | None = None):
    """CCFIE coefficient from the cancelled Bessel-product form.

    The Hankel factors of the Calderon products cancel, leaving weights
    ``J'(k~a) J(ka) (1+E^{N~})(1+E^S)`` and
    ``J(k~a) J'(ka) (1+E^{MFIO~})(1+E^{MFIO})`` (TM; the TE case swaps the
    roles of J and J').  Independent algebra for the weighted average in
    :func:`upsilon`.
    """
    if form.family is not Family.CCFIE:
        raise ValueError("the two-term form only exists for the Calderon formulations")
    qa = _modes(q, cfg)
    aq = np.abs(qa)
    top = int(aq.max())
    tab_k = _table(complex(cfg.ka), top)
    tab_c = _table(cfg.ktilde * cfg.a, top)
    j_k, jp_k = tab_k.j[aq], tab_k.jp[aq]
    j_c, jp_c = tab_c.j[aq], tab_c.jp[aq]
    C, P = Wavenumber.COMPLEX, Wavenumber.PHYSICAL

    def one_plus(tag, wn):
        e = spectral_error(OperatorKind(tag, wn), qa, cfg, harmonics, filtered=form.filtered)
        return 1 + np.atleast_1d(e.total)

    if form.polarization is Polarization.TM:
        b_e = (jp_c * j_k).to_complex()
        b_m = (j_c * jp_k).to_complex()
        e_pre, e_sys = one_plus(Operator.Hypersingular, C), one_plus(Operator.SingleLayer, P)
        m_pre, m_sys = one_plus(Operator.TE_MFIO, C), one_plus(Operator.TM_MFIO, P)
    else:
        b_e = (j_c * jp_k).to_complex()
        b_m = (jp_c * j_k).to_complex()
        e_pre, e_sys = one_plus(Operator.SingleLayer, C), one_plus(Operator.Hypersingular, P)
        m_pre, m_sys = one_plus(Operator.TM_MFIO, C), one_plus(Operator.TE_MFIO, P)
    # Bessel products at large orders are far below double range; only their ratio matters
    scale = np.maximum(np.abs(b_e), np.abs(b_m))
    w_e = b_e / scale * e_pre * e_sys
    w_m = b_m / scale * m_pre * m_sys
    F = pyramid_fourier_coeff(qa, cfg.N)
    out = (w_e * (F / e_sys - 1) + w_m * (F / m_sys - 1)) / (w_e + w_m)
    return _shape(q, out)


def rho(form: Formulation, q=None, cfg: ProblemConfig | None = None, harmonics: int | None = None,
        route: str = "general"):
    """Predicted scattering error coefficient ``rho_q``.

    ``route="general"`` uses ``F_q (upsilon_q + 1) - 1``;
    ``route="direct"`` uses ``-E^A / (1 + E)`` for the EFIE and MFIE and the
    CEFIO/CMFIO-weighted average of those for the CCFIE.
    """
    qa = _modes(q, cfg)
    F = pyramid_fourier_coeff(qa, cfg.N)
    if route == "general":
        return _shape(q, F * (np.atleast_1d(upsilon(form, qa, cfg, harmonics)) + 1) - 1)
    if route != "direct":
        raise ValueError(f"unknown route {route!r}")

    def direct(f: Formulation) -> np.ndarray:
        err = spectral_error(f.system_operator, qa, cfg, harmonics, filtered=f.filtered)
        return -np.atleast_1d(err.aliasing) / (1 + np.atleast_1d(err.total))

    if form.family is not Family.CCFIE:
        return _shape(q, direct(form))
    lam_e, lam_m = _calderon_parts(form, qa, cfg, harmonics)
    out = (lam_e * direct(_efie_of(form)) + lam_m * direct(form.parts()[1])) / (lam_e + lam_m)
    return _shape(q, out)


# ---------------------------------------------------------------------------
# error measures


def _sobolev_order(pol: Polarization) -> float:
    return -0.5 if pol is Polarization.TM else 0.5


def norm_weights(norm: Norm, pol: Polarization, cfg: ProblemConfig, q: np.ndarray | None = None) -> np.ndarray:
    """Per-mode weights ``w_q`` of a current-error measure."""
    q = cfg.modes if q is None else q
    s = _sobolev_order(pol)
    if norm is Norm.L2:
        return np.ones(q.shape)
    if norm is Norm.Hs:
        return (1.0 + q.astype(float) ** 2) ** s
    if norm is Norm.Hsk:
        return (cfg.ka**2 + q.astype(float) ** 2) ** s
    if norm is Norm.P:
        tab = _table(complex(cfg.ka), int(np.abs(q).max()))
        aq = np.abs(q)
        prod = (tab.j[aq] * tab.h2[aq]) if pol is Polarization.TM else (tab.jp[aq] * tab.h2p[aq])
        return cfg.k * cfg.eta * math.pi * cfg.a / 2 * prod.to_complex()
    raise ValueError(f"unknown norm {norm}")


def _quotient(num: np.ndarray, den: np.ndarray, complex_weights: bool) -> float:
    top, bottom = np.sum(num), np.sum(den)
    if bottom == 0 or not np.isfinite(bottom):
        raise EmptySpectrumError("weighted current modes sum to zero")
    ratio = top / bottom
    return float(math.sqrt(abs(ratio))) if complex_weights else float(math.sqrt(ratio.real))


def discrete_modes(form: Formulation, cfg: ProblemConfig, engine: str = "predicted") -> np.ndarray:
    """``upsilon_q`` over the retained band from either engine."""
    if engine == "predicted":
        return np.atleast_1d(upsilon(form, cfg.modes, cfg))
    if engine == "numerical":
        cur = bem.solve(form, cfg)
        U = np.atleast_1d(_exact_current(form.polarization, cfg))
        return cur.modes / U - 1
    raise ValueError(f"unknown engine {engine!r}")


def _exact_current(pol: Polarization, cfg: ProblemConfig) -> np.ndarray:
    from .excitation import mie_current_coeff

    return mie_current_coeff(pol, cfg.modes, cfg)


def current_error_from(ups: np.ndarray, pol: Polarization, cfg: ProblemConfig, norm: Norm) -> float:
    """Weighted relative current error for given coefficients ``upsilon_q``."""
    U = _exact_current(pol, cfg)
    w = norm_weights(norm, pol, cfg)
    mag = np.abs(U) ** 2
    return _quotient(mag * np.abs(ups) ** 2 * w, mag * w, norm is Norm.P)


def current_error(form: Formulation, cfg: ProblemConfig, norm: Norm | str = Norm.L2,
                  engine: str = "predicted") -> float:
    """Relative current error ``(sum |U_q upsilon_q|^2 w_q / sum |U_q|^2 w_q)^(1/2)``.

    The P seminorm has complex weights; its quotient enters through its
    modulus before the square root.
    """
    norm = Norm(norm) if isinstance(norm, str) else norm
    return current_error_from(discrete_modes(form, cfg, engine), form.polarization, cfg, norm)


def scattering_modes(form: Formulation, cfg: ProblemConfig, engine: str = "predicted") -> np.ndarray:
    """``rho_q`` over the retained band from either engine."""
    if engine == "predicted":
        return np.atleast_1d(rho(form, cfg.modes, cfg))
    if engine == "numerical":
        from .excitation import mie_scattering_coeff

        cur = bem.solve(form, cfg)
        R = mie_scattering_coeff(form.polarization, cfg.modes, cfg)
        return bem.far_field(cur, cfg) / R - 1
    raise ValueError(f"unknown engine {engine!r}")


def scattering_error_from(rh: np.ndarray, pol: Polarization, cfg: ProblemConfig, form: str = "R") -> float:
    """``s_L2`` for given ``rho_q``, weighted by ``|R_q|^2`` or by ``|U_q J_q|^2``.

    The two weightings differ by a constant factor, so they give the same
    value; ``form="UJ"`` uses ``J'`` in place of ``J`` for TE.
    """
    q = cfg.modes
    if form == "R":
        from .excitation import mie_scattering_coeff

        w = np.abs(mie_scattering_coeff(pol, q, cfg)) ** 2
    elif form == "UJ":
        tab = _table(complex(cfg.ka), int(np.abs(q).max()))
        b = tab.j[np.abs(q)] if pol is Polarization.TM else tab.jp[np.abs(q)]
        w = np.abs(_exact_current(pol, cfg) * b.to_complex()) ** 2
    else:
        raise ValueError(f"unknown form {form!r}")
    return _quotient(w * np.abs(rh) ** 2, w, False)


def scattering_error(form: Formulation, cfg: ProblemConfig, engine: str = "predicted", weighting: str = "R") -> float:
    """Relative far-field error ``s_L2``."""
    return scattering_error_from(scattering_modes(form, cfg, engine), form.polarization, cfg, weighting)


# ---------------------------------------------------------------------------
# reports and slope fits

DEFAULT_NORMS = (Norm.L2, Norm.Hs, Norm.Hsk)


@dataclass
class ErrorReport:
    """All error measures of one formulation at one frequency."""

    formulation: Formulation
    ka: float
    measures: dict = field(default_factory=dict)
    masked: bool = False

    def __post_init__(self):
        bad = {k: v for k, v in self.measures.items() if not v >= 0}
        if bad:
            raise ValueError(f"negative or undefined measures: {bad}")


def is_masked(form: Formulation, cfg: ProblemConfig, threshold: float = RESONANCE_THRESHOLD) -> bool:
    """Resonance masking of one formulation at one frequency.

    EFIE and MFIE samples are masked when their system matrix is close to
    an interior resonance or has a collapsed eigenvalue (see
    :class:`ResonanceProbe`).  The Calderon operators have no interior
    resonances and are never masked.
    """
    if form.family is Family.CCFIE:
        return False
    return resonance_probe(form.system_operator, cfg, filtered=form.filtered).near(cfg.ka, threshold)


def error_report(form: Formulation, cfg: ProblemConfig, norms=DEFAULT_NORMS, engine: str = "predicted") -> ErrorReport:
    """Current errors in ``norms`` plus ``S_L2`` and the masking flag."""
    ups = discrete_modes(form, cfg, engine)
    pol = form.polarization
    measures = {n.value: current_error_from(ups, pol, cfg, n) for n in norms}
    F = pyramid_fourier_coeff(cfg.modes, cfg.N)
    measures["S_L2"] = scattering_error_from(F * (ups + 1) - 1, pol, cfg)
    return ErrorReport(form, cfg.ka, measures, is_masked(form, cfg))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    points: int

    def within(self, target: float, tol: float) -> bool:
        return abs(self.slope - target) <= tol


MIN_FIT_POINTS = 12


def fit_slope(ka, values, mask=None, min_points: int = MIN_FIT_POINTS) -> SlopeFit:
    """Least-squares slope of ``log(values)`` against ``log(ka)``.

    Parameters
    ----------
    ka, values : array_like
    mask : array_like of bool, optional
        True marks samples to exclude.
    min_points : int
        Minimum number of retained samples.

    Raises
    ------
    InsufficientPointsError
    """
    x = np.asarray(ka, dtype=float)
    y = np.asarray(values, dtype=float)
    keep = np.isfinite(y) & (y > 0)
    if mask is not None:
        keep &= ~np.asarray(mask, dtype=bool)
    n = int(keep.sum())
    if n < min_points:
        raise InsufficientPointsError(f"{n} usable points; at least {min_points} needed")
    res = stats.linregress(np.log(x[keep]), np.log(y[keep]))
    return SlopeFit(float(res.slope), float(res.stderr), n)


__all__ = [
    "DEFAULT_NORMS",
    "ENGINES",
    "EmptySpectrumError",
    "ErrorReport",
    "InsufficientPointsError",
    "Norm",
    "SlopeFit",
    "current_error",
    "current_error_from",
    "discrete_modes",
    "error_report",
    "fit_slope",
    "is_masked",
    "norm_weights",
    "rho",
    "scattering_error",
    "scattering_error_from",
    "scattering_modes",
    "upsilon",
    "upsilon_two_term",
]
