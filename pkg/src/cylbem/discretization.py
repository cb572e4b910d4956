"""Predicted spectra of the Galerkin matrices on the pyramid basis.

The matrix of an operator on N uniform arcs is circulant; its eigenvalue
at mode q folds the continuous spectrum back into the band,

    lam_hat_q = sum_s lam_{q+sN} F_{q+sN}^2 ,   F_q = sinc^2(q / N),

so the relative error splits into a projection part ``F_q^2 - 1`` and an
aliasing part carried by the ``s != 0`` terms.  Composite operators are
formed with the same algebra the discrete systems use (sums of matrices,
products through the inverse Gram matrix), and their error follows from
the composite eigenvalues directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .spectra import (
    RESONANCE_THRESHOLD,
    RESONANT_FACTOR,
    Operator,
    OperatorKind,
    ProblemConfig,
    SpectrumView,
    continuous_eigenvalue,
    filter_cutoff,
    is_near_resonance,
    resonance_distance,
)

logger = logging.getLogger(__name__)

# composite denominators below this are treated as exact zeros
_HAZARD = 1e-300


class SpectralDivisionError(ZeroDivisionError):
    """A continuous eigenvalue or composite denominator vanished at some mode."""

    def __init__(self, what: str, q, ka: float):
        super().__init__(f"{what} vanishes at q={q} (ka={ka:g})")
        self.q = q
        self.ka = ka


def pyramid_fourier_coeff(q, N: int):
    """Fourier coefficient ``F_q = (sin(pi q/N) / (pi q/N))^2`` of the pyramid."""
    f = np.sinc(np.asarray(q, dtype=float) / N) ** 2
    return float(f) if f.ndim == 0 else f


def gram_eigenvalue(q, N: int):
    """Exact eigenvalue ``2/3 + cos(2 pi q/N)/3`` of the normalised Gram matrix."""
    g = 2.0 / 3.0 + np.cos(2 * np.pi * np.asarray(q, dtype=float) / N) / 3.0
    return float(g) if g.ndim == 0 else g


def _harmonics(cfg: ProblemConfig, harmonics: int | None) -> int:
    return cfg.harmonics if harmonics is None else int(harmonics)


def _filtered(op: OperatorKind, filtered: bool) -> OperatorKind:
    if filtered and op.tag is Operator.Hypersingular:
        return OperatorKind(Operator.FilteredHypersingular, op.wavenumber)
    return op


def _aliased_terms(op: OperatorKind, q: np.ndarray, cfg: ProblemConfig, S: int) -> np.ndarray:
    """``lam_{q+sN} F_{q+sN}^2`` for s = -S..S, shape (2S+1, len(q))."""
    s = np.arange(-S, S + 1)[:, None]
    orders = q[None, :] + s * cfg.N
    lam = continuous_eigenvalue(op, orders.ravel(), cfg).reshape(orders.shape)
    terms = lam * pyramid_fourier_coeff(orders, cfg.N) ** 2
    if S and not np.all(np.isfinite(terms)):
        raise FloatingPointError(f"non-finite aliased term for {op} at ka={cfg.ka:g}")
    return terms


def _half(values):
    return 0.5 * values


def discrete_eigenvalue(op: OperatorKind, q, cfg: ProblemConfig, harmonics: int | None = None,
                        filtered: bool = False):
    """Eigenvalue of the Galerkin matrix of ``op`` at mode(s) ``q``.

    Parameters
    ----------
    op : OperatorKind
        Base kinds use the folded sum over ``s in [-S, S]``.  Composite kinds
        are built from their constituents with the matrix algebra of the
        discrete systems: MFIO as ``G/2 +- D``, Calderon products as
        ``A G^-1 B``.
    q : int or array_like of int
    cfg : ProblemConfig
    harmonics : int, optional
        Overrides ``cfg.harmonics``.
    filtered : bool
        Replace every hypersingular constituent by its filtered version.
    """
    qa = np.asarray(q, dtype=np.int64)
    out = _discrete(_filtered(op, filtered), qa.reshape(-1), cfg, _harmonics(cfg, harmonics), filtered)
    out = out.reshape(qa.shape)
    return complex(out) if out.ndim == 0 else out


def _discrete(op: OperatorKind, q: np.ndarray, cfg: ProblemConfig, S: int, filtered: bool) -> np.ndarray:
    if op.is_base:
        return _aliased_terms(op, q, cfg, S).sum(axis=0)
    mode, left, right = op.expand()
    if mode in ("sum", "diff"):
        parts = []
        for part in (left, right):
            if isinstance(part, tuple):
                parts.append(_half(_discrete(part[1], q, cfg, S, filtered)))
            else:
                parts.append(_discrete(_filtered(part, filtered), q, cfg, S, filtered))
        return parts[0] + parts[1] if mode == "sum" else parts[0] - parts[1]
    gram = _discrete(OperatorKind(Operator.Identity), q, cfg, S, filtered)
    a = _discrete(_filtered(left, filtered), q, cfg, S, filtered)
    b = _discrete(_filtered(right, filtered), q, cfg, S, filtered)
    return a * b / gram


def _continuous_composite(op: OperatorKind, q: np.ndarray, cfg: ProblemConfig, filtered: bool) -> np.ndarray:
    """Continuous eigenvalue, with hypersingular constituents optionally filtered."""
    op = _filtered(op, filtered)
    if op.is_base or not filtered:
        return continuous_eigenvalue(op, q, cfg)
    mode, left, right = op.expand()
    if mode in ("sum", "diff"):
        # MFIO kinds contain no hypersingular factor
        return continuous_eigenvalue(op, q, cfg)
    a = _continuous_composite(left, q, cfg, filtered)
    b = _continuous_composite(right, q, cfg, filtered)
    return a * b if mode == "product" else a + b


@dataclass(frozen=True)
class SpectralErrorBreakdown:
    """Relative eigenvalue error ``E = E^P + E^A`` at one or more modes.

    Attributes hold scalars for a scalar ``q`` and arrays otherwise.
    """

    q: np.ndarray
    projection: np.ndarray
    aliasing: np.ndarray
    total: np.ndarray


def spectral_error(op: OperatorKind, q, cfg: ProblemConfig, harmonics: int | None = None,
                   filtered: bool = False) -> SpectralErrorBreakdown:
    """Projection / aliasing split of the discrete eigenvalue error.

    For base kinds ``E^A`` is the folded sum over ``s != 0`` divided by
    ``lam_q``.  For composite kinds the total is the exact ratio of the
    composite discrete and continuous eigenvalues minus one, and ``E^A`` is
    the remainder ``E - E^P``; for a sum this equals the weighted mean of
    the constituent aliasing errors.

    Raises
    ------
    SpectralDivisionError
        If ``|lam_q|`` (or a composite denominator) is below 1e-300.
    """
    qa = np.asarray(q, dtype=np.int64)
    flat = qa.reshape(-1)
    S = _harmonics(cfg, harmonics)
    op = _filtered(op, filtered)
    proj = pyramid_fourier_coeff(flat, cfg.N) ** 2 - 1.0
    proj = np.atleast_1d(proj)
    if op.is_base:
        terms = _aliased_terms(op, flat, cfg, S)
        lam = continuous_eigenvalue(op, flat, cfg)
        _check_hazard(lam, flat, cfg, f"continuous eigenvalue of {op}")
        alias = (terms.sum(axis=0) - terms[S]) / lam
        total = proj + alias
    else:
        lam = _continuous_composite(op, flat, cfg, filtered)
        _check_hazard(lam, flat, cfg, f"continuous eigenvalue of {op}")
        lam_hat = _discrete(op, flat, cfg, S, filtered)
        total = lam_hat / lam - 1.0
        alias = total - proj
    shape = qa.shape
    if not shape:
        return SpectralErrorBreakdown(int(qa), float(proj[0]), complex(alias[0]), complex(total[0]))
    return SpectralErrorBreakdown(qa, proj.reshape(shape), alias.reshape(shape), total.reshape(shape))


def _check_hazard(values: np.ndarray, q: np.ndarray, cfg: ProblemConfig, what: str) -> None:
    bad = np.abs(values) < _HAZARD
    if np.any(bad):
        raise SpectralDivisionError(what, q[bad].tolist(), cfg.ka)


def compose_sum(lam_m, err_m, lam_n, err_n):
    """Relative error of ``M + N`` from the constituent eigenvalues and errors."""
    return (lam_m * err_m + lam_n * err_n) / (lam_m + lam_n)


def compose_product(err_m, err_n):
    """Relative error of ``M N``: ``E^M + E^N + E^M E^N``."""
    return err_m + err_n + err_m * err_n


@dataclass(frozen=True)
class FilterSpec:
    """Ideal spectral cutoff of the hypersingular operator."""

    cutoff: int
    epsilon: float

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError(f"filter cutoff must be >= 1, got {self.cutoff}")

    @classmethod
    def from_config(cls, cfg: ProblemConfig) -> "FilterSpec":
        """``q_lim = floor((n_lambda - 1 - epsilon) k a)``."""
        return cls(filter_cutoff(cfg), cfg.epsilon)


def apply_filter(view: SpectrumView, filt: FilterSpec) -> SpectrumView:
    """Zero the hypersingular spectrum outside ``|q| <= q_lim``."""
    if view.kind.tag is not Operator.Hypersingular:
        raise ValueError(f"only the hypersingular spectrum can be filtered, got {view.kind}")
    keep = np.abs(view.modes) <= filt.cutoff
    values = np.where(keep, view.values, 0)
    return SpectrumView(view.config, OperatorKind(Operator.FilteredHypersingular, view.kind.wavenumber), values)


def alias_free_band(cfg: ProblemConfig) -> int:
    """Largest ``|q|`` whose aliased orders ``q + sN`` (s != 0) all exceed ``q_lim``.

    Equals ``N - q_lim - 1``: within it the filtered hypersingular matrix has
    no aliasing error at all.
    """
    return cfg.N - filter_cutoff(cfg) - 1


# a discrete eigenvalue below this fraction of its continuous value counts as collapsed
COLLAPSE_THRESHOLD = 0.2


@dataclass(frozen=True)
class ResonanceProbe:
    """Resonance indicators of one Galerkin matrix over ``0 <= q <= floor(ka)``.

    Attributes
    ----------
    distance : float
        ``min_q |1 + E_q| |J_q / H_q|`` (``J'`` / ``H'`` for operators whose
        resonances are the zeros of ``J'``).  Vanishes where a discrete
        eigenvalue does.
    collapse : float
        ``min_q |1 + E_q| = min_q |lam_hat_q / lam_q|``.  Small where aliasing
        nearly cancels a quasi-resonant eigenvalue; these peaks widen with ka
        because the aliasing error of the hypersingular operator grows.
    """

    distance: float
    collapse: float

    def near(self, ka: float, threshold: float = RESONANCE_THRESHOLD,
             collapse_threshold: float = COLLAPSE_THRESHOLD) -> bool:
        return is_near_resonance(self.distance, ka, threshold) or self.collapse < collapse_threshold


def resonance_probe(op: OperatorKind, cfg: ProblemConfig, filtered: bool = False) -> ResonanceProbe:
    """Evaluate :class:`ResonanceProbe` for the Galerkin matrix of ``op``."""
    op = _filtered(op, filtered)
    q = np.arange(int(math.floor(cfg.ka)) + 1)
    corr = 1 + np.atleast_1d(spectral_error(op, q, cfg).total)
    dist = resonance_distance(cfg.ka, RESONANT_FACTOR[op.tag], correction=corr)
    return ResonanceProbe(dist, float(np.min(np.abs(corr))))


def discrete_resonance_distance(op: OperatorKind, cfg: ProblemConfig, filtered: bool = False) -> float:
    """``resonance_probe(op, cfg, filtered).distance``."""
    return resonance_probe(op, cfg, filtered).distance


# Reference growth exponents in ka of the aliasing error at q = floor(ka).
ALIASING_SLOPES = {
    (Operator.SingleLayer, "abs"): -1.0 / 3.0,
    (Operator.Hypersingular, "abs"): 1.0 / 3.0,
    (Operator.DoubleLayer, "im"): -1.0,
    (Operator.DoubleLayer, "re"): -5.0 / 3.0,
    (Operator.TM_CCFIO, "abs"): 1.0 / 3.0,
    (Operator.TE_CCFIO, "abs"): 1.0 / 3.0,
    (Operator.FilteredHypersingular, "abs"): 0.0,
}


def transition_index(cfg: ProblemConfig) -> int:
    """Mode ``floor(ka)`` used to probe the transition region."""
    return int(math.floor(cfg.ka))


__all__ = [
    "ALIASING_SLOPES",
    "COLLAPSE_THRESHOLD",
    "FilterSpec",
    "SpectralDivisionError",
    "SpectralErrorBreakdown",
    "alias_free_band",
    "apply_filter",
    "compose_product",
    "compose_sum",
    "discrete_resonance_distance",
    "discrete_eigenvalue",
    "gram_eigenvalue",
    "pyramid_fourier_coeff",
    "ResonanceProbe",
    "resonance_probe",
    "spectral_error",
    "transition_index",
]
