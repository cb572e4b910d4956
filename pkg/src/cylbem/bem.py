"""Galerkin BEM on the circle with a pyramid basis.

Entries are normalised as ``O_mn = (1/h) <f_m, O f_n>``.  On a uniform
mesh the matrices are circulant, so only the first row is assembled and
every solve is diagonal in the DFT basis.

First row
    The overlap of two pyramids is the cubic B-spline ``beta3``, so

        row[n] = h * int_{-2}^{2} K(h (x + n)) beta3(x) dx .

    The logarithmic part of the Green's function is removed and integrated
    in closed form against the polynomial pieces of ``beta3``; the smooth
    remainder uses Gauss-Legendre per knot interval, with a cubic
    substitution on intervals that touch the source point.  The
    hypersingular operator uses the Maue form, which replaces ``beta3`` by
    ``-beta3''``.

Dense matrices
    :func:`assemble_dense` builds the full matrix element pair by element
    pair (tensor Gauss for separated pairs, tensor tanh-sinh for coincident
    and adjacent ones).  It shares no code with the row path and serves as
    its cross-check.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import hankel2

from .discretization import SpectralDivisionError, pyramid_fourier_coeff
from .excitation import Field, incident_field, mie_current_coeff, mie_scattering_coeff
from .spectra import (
    RESONANT_FACTOR,
    Operator,
    OperatorKind,
    Polarization,
    ProblemConfig,
    Wavenumber,
    continuous_eigenvalue,
    filter_cutoff,
    resonance_ratios,
)

logger = logging.getLogger(__name__)

_HAZARD = 1e-300
# relative change allowed when the singular entries are recomputed at twice the order
_REFINE_TOL = 1e-8


class QuadratureConvergenceError(ArithmeticError):
    """A singular entry changed by more than the tolerance under refinement."""

    def __init__(self, kind, entry: int, change: float):
        super().__init__(f"{kind}: entry {entry} changed by {change:.2e} under quadrature refinement")
        self.entry = entry
        self.change = change


class SingularModeError(SpectralDivisionError):
    """A system eigenvalue is numerically zero (exact resonance)."""


# ---------------------------------------------------------------------------
# kernels; ``u`` is the arc-length offset between source and observation


def _chord(u: np.ndarray, a: float) -> np.ndarray:
    return 2 * a * np.abs(np.sin(u / (2 * a)))


def _green(kappa: complex, a: float):
    def g(u):
        return -0.25j * hankel2(0, kappa * _chord(u, a))

    return g


def _green_cos(kappa: complex, a: float):
    def g(u):
        return -0.25j * hankel2(0, kappa * _chord(u, a)) * np.cos(u / a)

    return g


def _double_layer(kappa: complex, a: float, h: float):
    def g(u):
        r = _chord(u, a)
        tiny = r < 1e-8 * h
        safe = np.where(tiny, h, r)
        val = 1j * kappa * safe / (8 * a) * hankel2(1, kappa * safe)
        # removable singularity; the curvature limit
        return np.where(tiny, -1.0 / (4 * math.pi * a), val)

    return g


# ---------------------------------------------------------------------------
# first-row path

# polynomial pieces on the knot intervals [-2,-1], [-1,0], [0,1], [1,2]
_BETA3 = (
    Polynomial([8, 12, 6, 1]) / 6,
    Polynomial([2 / 3, 0, -1, -1 / 2]),
    Polynomial([2 / 3, 0, -1, 1 / 2]),
    Polynomial([8, -12, 6, -1]) / 6,
)
_BETA3_DD = (
    Polynomial([2, 1]),
    Polynomial([-2, -3]),
    Polynomial([-2, 3]),
    Polynomial([2, -1]),
)


def beta3(x):
    """Cubic B-spline: overlap of two unit pyramids at offset ``x``."""
    ax = np.abs(np.asarray(x, dtype=float))
    return np.where(ax <= 1, 2 / 3 - ax**2 + ax**3 / 2, np.where(ax <= 2, (2 - ax) ** 3 / 6, 0.0))


@lru_cache(maxsize=16)
def _gauss01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return (x + 1) / 2, w / 2


def _tlogt_antideriv(j: int, t: float) -> float:
    """Antiderivative of ``t^j ln|t|`` vanishing at 0."""
    if t == 0:
        return 0.0
    return t ** (j + 1) * (math.log(abs(t)) / (j + 1) - 1.0 / (j + 1) ** 2)


def _log_moment(poly: Polynomial, t0: float, t1: float) -> float:
    """``int_{t0}^{t1} poly(t) ln|t| dt`` in closed form."""
    return sum(c * (_tlogt_antideriv(j, t1) - _tlogt_antideriv(j, t0)) for j, c in enumerate(poly.coef))


@dataclass(frozen=True)
class _Term:
    """``scale * int g(h(x+n)) P(x) dx`` with ``g + logc ln|u|`` bounded at u = 0."""

    scale: complex
    g: object
    logc: float
    pieces: tuple


def _row_term(term: _Term, N: int, h: float, Q: int) -> np.ndarray:
    offs = np.arange(N)
    offs[offs > N // 2] -= N
    xg, wg = _gauss01(Q)
    row = np.zeros(N, dtype=complex)
    singular = []
    for i, poly in enumerate(term.pieces):
        x0 = i - 2.0
        hits = _singular_ends(x0, offs, N)
        regular = hits == 0
        x = x0 + xg
        u = h * (x[None, :] + offs[regular, None])
        row[regular] += (term.g(u) * poly(x)[None, :]) @ wg
        for n in np.flatnonzero(~regular):
            singular.append((n, i))
    for n, i in singular:
        row[n] += _singular_piece(term, int(offs[n]), i, N, h, Q)
    return term.scale * row


def _singular_ends(x0: float, offs: np.ndarray, N: int) -> np.ndarray:
    """+1/-1 if the interval [x0, x0+1] shifted by ``offs`` starts/ends on a multiple of N."""
    out = np.zeros(offs.shape, dtype=int)
    out[np.mod(x0 + offs, N) == 0] = 1
    out[np.mod(x0 + 1 + offs, N) == 0] = -1
    return out


def _singular_piece(term: _Term, off: int, i: int, N: int, h: float, Q: int) -> complex:
    x0, x1 = i - 2.0, i - 1.0
    poly = term.pieces[i]
    if (x0 + off) % N == 0:
        xe, direction = x0, 1.0
    else:
        xe, direction = x1, -1.0
    shift = off - int(round((xe + off) / N)) * N  # x + shift vanishes at the source point
    tg, wg = _gauss01(Q)
    x = xe + direction * tg**3
    jac = 3 * tg**2
    smooth = term.g(h * (x + off)) + term.logc * np.log(np.abs(h * (x + shift)))
    total = np.sum(smooth * poly(x) * jac * wg)
    if term.logc:
        local = poly(Polynomial([-shift, 1]))  # P as a polynomial in t = x + shift
        total -= term.logc * (math.log(h) * poly.integ()(x1) - math.log(h) * poly.integ()(x0)
                              + _log_moment(local, x0 + shift, x1 + shift))
    return complex(total)


def _terms(kind: OperatorKind, cfg: ProblemConfig) -> list:
    kappa = kind.argument(cfg) / cfg.a
    a, h = cfg.a, cfg.h
    inv2pi = 1.0 / (2 * math.pi)
    tag = kind.tag
    if tag is Operator.SingleLayer:
        return [_Term(kappa * h, _green(kappa, a), inv2pi, _BETA3)]
    if tag in (Operator.DoubleLayer, Operator.AdjDoubleLayer):
        return [_Term(h, _double_layer(kappa, a, h), 0.0, _BETA3)]
    if tag is Operator.Hypersingular:
        return [
            _Term(-1.0 / (kappa * h), _green(kappa, a), inv2pi, _BETA3_DD),
            _Term(-kappa * h, _green_cos(kappa, a), inv2pi, _BETA3),
        ]
    raise ValueError(f"{kind} cannot be assembled by quadrature")


def mode_order(values: np.ndarray) -> np.ndarray:
    """Reorder an FFT-ordered length-N array to modes ``-(N-1)/2..(N-1)/2``."""
    return np.fft.fftshift(values)


@dataclass(frozen=True)
class CirculantOperatorMatrix:
    """First row of a circulant Galerkin matrix and its eigenvalues.

    ``dft_eigenvalues[i]`` belongs to mode ``q = i - (N-1)/2``.
    """

    kind: OperatorKind
    N: int
    first_row: np.ndarray = field(repr=False)
    dft_eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "dft_eigenvalues", mode_order(np.fft.fft(self.first_row)))

    def eigenvalue(self, q):
        """Eigenvalue at mode index ``q`` (any integer; taken mod N)."""
        return np.fft.fft(self.first_row)[np.mod(q, self.N)]

    def dense(self) -> np.ndarray:
        """Full matrix ``A[m, n] = row[(n - m) mod N]``."""
        idx = np.arange(self.N)
        return self.first_row[np.mod(idx[None, :] - idx[:, None], self.N)]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        # A x = ifft(conj-free eigenvalue * fft) with the row convention above
        lam = np.fft.fft(self.first_row)
        return np.fft.fft(lam * np.fft.ifft(x))


def _identity_row(N: int) -> np.ndarray:
    row = np.zeros(N, dtype=complex)
    offs = np.arange(N)
    offs[offs > N // 2] -= N
    # with N = 3 both neighbours wrap onto the same entry
    for n, o in enumerate(offs):
        row[n] = sum(float(beta3(o + s * N)) for s in (-1, 0, 1))
    return row


@lru_cache(maxsize=64)
def assemble(kind: OperatorKind, cfg: ProblemConfig) -> CirculantOperatorMatrix:
    """Assemble the first row of a base operator's Galerkin matrix.

    Parameters
    ----------
    kind : OperatorKind
        S, D, D*, N or I at k or k~.
    cfg : ProblemConfig
        ``cfg.quadrature`` Gauss points are used per knot interval.

    Raises
    ------
    QuadratureConvergenceError
        If a singular entry moves by more than 1e-8 (relative to the row
        scale) when recomputed with twice the quadrature order.
    """
    if kind.tag is Operator.Identity:
        return CirculantOperatorMatrix(kind, cfg.N, _identity_row(cfg.N))
    if not kind.is_base or kind.tag is Operator.FilteredHypersingular:
        raise ValueError(f"{kind} is not a quadrature-assembled operator")
    terms = _terms(kind, cfg)
    Q = cfg.quadrature
    row = sum(_row_term(t, cfg.N, cfg.h, Q) for t in terms)
    _refinement_check(kind, terms, row, cfg)
    logger.debug("assembled %s at ka=%g, N=%d", kind, cfg.ka, cfg.N)
    return CirculantOperatorMatrix(kind, cfg.N, row)


def _refinement_check(kind, terms, row, cfg):
    near = [n for n in (0, 1, 2, cfg.N - 1, cfg.N - 2) if n < cfg.N]
    fine = sum(_row_term(t, cfg.N, cfg.h, 2 * cfg.quadrature) for t in terms)
    scale = np.max(np.abs(row))
    for n in near:
        change = abs(fine[n] - row[n]) / scale
        if change > _REFINE_TOL:
            raise QuadratureConvergenceError(kind, n, change)


# ---------------------------------------------------------------------------
# dense element-pair path


@lru_cache(maxsize=8)
def _tanh_sinh(level: int):
    """Nodes, complements and weights of a tanh-sinh rule on [0, 1]."""
    step = 2.0**-level * 4.0
    t = np.arange(-int(3.2 / step), int(3.2 / step) + 1) * step
    x = 1.0 / (1.0 + np.exp(-math.pi * np.sinh(t)))
    c = 1.0 / (1.0 + np.exp(math.pi * np.sinh(t)))
    w = step * math.pi * np.cosh(t) * x * c
    keep = w > 1e-20
    return x[keep], c[keep], w[keep]


def _pair_kernels(kind: OperatorKind, cfg: ProblemConfig):
    """Local integrand factors ``[(kernel(ds), weight_ab)]`` for one operator."""
    kappa = kind.argument(cfg) / cfg.a
    a, h = cfg.a, cfg.h
    shape = lambda x, b: x if b else 1.0 - x  # noqa: E731
    sign = (-1.0, 1.0)
    tag = kind.tag
    if tag is Operator.SingleLayer:
        g = _green(kappa, a)
        return [(lambda ds, g=g: kappa * h * g(ds), lambda xi, eta, A, B: shape(xi, A) * shape(eta, B))]
    if tag in (Operator.DoubleLayer, Operator.AdjDoubleLayer):
        g = _double_layer(kappa, a, h)
        return [(lambda ds, g=g: h * g(ds), lambda xi, eta, A, B: shape(xi, A) * shape(eta, B))]
    if tag is Operator.Hypersingular:
        g, gc = _green(kappa, a), _green_cos(kappa, a)
        return [
            (lambda ds, g=g: g(ds) / (kappa * h), lambda xi, eta, A, B: sign[A] * sign[B] + 0 * xi * eta),
            (lambda ds, gc=gc: -kappa * h * gc(ds), lambda xi, eta, A, B: shape(xi, A) * shape(eta, B)),
        ]
    raise ValueError(f"{kind} has no dense quadrature path")


def _local_blocks(kind, cfg, gauss: int, level: int) -> np.ndarray:
    """Element-pair blocks ``M[e, e', A, B]`` over all pairs."""
    N, h = cfg.N, cfg.h
    pieces = _pair_kernels(kind, cfg)
    blocks = np.zeros((N, N, 2, 2), dtype=complex)
    e = np.arange(N)
    ee, ff = np.meshgrid(e, e, indexing="ij")
    gap = np.mod(ff - ee, N)
    near = (gap == 0) | (gap == 1) | (gap == N - 1)

    # separated pairs: tensor Gauss
    xg, wg = _gauss01(gauss)
    XI, ETA = np.meshgrid(xg, xg, indexing="ij")
    W = np.outer(wg, wg)
    pe, pf = ee[~near], ff[~near]
    # arc offset between the element starts, taken in (-pi a, pi a]
    base = (pe - pf) * h
    ds = base[:, None, None] + h * (XI - ETA)[None]
    for kern, wfun in pieces:
        kv = kern(ds) * W[None]
        for A in (0, 1):
            for B in (0, 1):
                blocks[pe, pf, A, B] += np.einsum("pij,ij->p", kv, wfun(XI, ETA, A, B))

    # coincident and adjacent pairs: tanh-sinh, inner integral split at the diagonal
    x, c, w = _tanh_sinh(level)
    for p, q in zip(ee[near], ff[near]):
        blocks[p, q] += _near_pair(pieces, int(np.mod(q - p, N)), N, h, x, c, w)
    return blocks


def _near_pair(pieces, gap: int, N: int, h: float, x, c, w) -> np.ndarray:
    """2x2 block of one coincident (gap 0) or adjacent pair."""
    if gap == 0:
        # xi outer; eta in [0, xi] and [xi, 1]
        XI, XIc = x[:, None], c[:, None]
        halves = (
            (XI * x[None, :], h * XI * c[None, :], XI),
            (XI + XIc * x[None, :], -h * XIc * x[None, :], XIc),
        )
    elif gap == 1:
        # shared node at xi = 1, eta = 0
        halves = ((x[None, :], -h * (c[:, None] + x[None, :]), 1.0),)
        XI = x[:, None]
    else:
        halves = ((x[None, :], h * (x[:, None] + c[None, :]), 1.0),)
        XI = x[:, None]
    out = np.zeros((2, 2), dtype=complex)
    for ETA, ds, jac in halves:
        WW = w[:, None] * w[None, :] * jac
        for kern, wfun in pieces:
            kv = kern(ds) * WW
            for A in (0, 1):
                for B in (0, 1):
                    out[A, B] += np.sum(kv * wfun(XI, ETA, A, B))
    return out


def assemble_dense(kind: OperatorKind, cfg: ProblemConfig, gauss: int = 16, level: int = 5) -> np.ndarray:
    """Full Galerkin matrix by element-pair quadrature, independent of the row path.

    Intended for small meshes (the cost is ``O(N^2)``).  Needs ``N >= 5``
    so that every element has two distinct neighbours.
    """
    if cfg.N < 5:
        raise ValueError("dense assembly needs N >= 5")
    N = cfg.N
    if kind.tag is Operator.Identity:
        A = np.zeros((N, N), dtype=complex)
        for m in range(N):
            A[m, m] = 2 / 3
            A[m, (m + 1) % N] = A[m, (m - 1) % N] = 1 / 6
        return A
    blocks = _local_blocks(kind, cfg, gauss, level)
    A = np.zeros((N, N), dtype=complex)
    # node m carries shape 0 on element m and shape 1 on element m-1
    for m in range(N):
        for em, sa in ((m, 0), ((m - 1) % N, 1)):
            for n in range(N):
                for en, sb in ((n, 0), ((n - 1) % N, 1)):
                    A[m, n] += blocks[em, en, sa, sb]
    return A


# ---------------------------------------------------------------------------
# right-hand sides


def rhs_vector(fld: Field, cfg: ProblemConfig, points: int | None = None) -> np.ndarray:
    """Tested incident field ``b_m = (1/h) int f_m E ds`` by Gauss-Legendre per element."""
    Q = points or cfg.quadrature
    xg, wg = _gauss01(Q)
    N, h, a = cfg.N, cfg.h, cfg.a
    starts = np.arange(N) * h
    s = starts[:, None] + h * xg[None, :]
    vals = incident_field(fld, s / a, cfg)
    rising = vals @ (wg * xg)  # shape 1 on element e feeds node e+1
    falling = vals @ (wg * (1 - xg))  # shape 0 on element e feeds node e
    return falling + np.roll(rising, 1)


def dft_modes(vector: np.ndarray) -> np.ndarray:
    """Modes ``X_q`` with ``vector_n = sum_q X_q exp(-j q phi_n)``, in mode order."""
    return mode_order(np.fft.ifft(vector))


def from_modes(modes: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft_modes`."""
    return np.fft.fft(np.fft.ifftshift(modes))


# ---------------------------------------------------------------------------
# formulations and solves


class Family(enum.Enum):
    EFIE = "EFIE"
    MFIE = "MFIE"
    CCFIE = "CCFIE"


class Formulation(enum.Enum):
    TM_EFIE = "TM-EFIE"
    TM_MFIE = "TM-MFIE"
    TE_EFIE = "TE-EFIE"
    TE_MFIE = "TE-MFIE"
    TM_CCFIE = "TM-CCFIE"
    TE_CCFIE = "TE-CCFIE"
    TE_EFIE_F = "TE-EFIE_F"
    TM_CCFIE_F = "TM-CCFIE_F"
    TE_CCFIE_F = "TE-CCFIE_F"

    @classmethod
    def parse(cls, text: str) -> "Formulation":
        key = text.strip()
        if key in cls.__members__:
            return cls[key]
        for f in cls:
            if f.value.lower() == key.lower():
                return f
        raise ValueError(f"unknown formulation {text!r}")

    @property
    def polarization(self) -> Polarization:
        return Polarization.TM if self.name.startswith("TM") else Polarization.TE

    @property
    def filtered(self) -> bool:
        return self.name.endswith("_F")

    @property
    def family(self) -> Family:
        return Family(self.name.split("_")[1])

    @property
    def system_operator(self) -> OperatorKind:
        """Operator whose spectrum is the system eigenvalue."""
        tm = self.polarization is Polarization.TM
        op = {
            Family.EFIE: Operator.SingleLayer if tm else Operator.Hypersingular,
            Family.MFIE: Operator.TM_MFIO if tm else Operator.TE_MFIO,
            Family.CCFIE: Operator.TM_CCFIO if tm else Operator.TE_CCFIO,
        }[self.family]
        return OperatorKind(op)

    def parts(self) -> tuple["Formulation", "Formulation"]:
        """Unpreconditioned EFIE and MFIE of the same polarization."""
        if self.polarization is Polarization.TM:
            return Formulation.TM_EFIE, Formulation.TM_MFIE
        return Formulation.TE_EFIE, Formulation.TE_MFIE


FORMULATIONS = tuple(Formulation)
UNFILTERED = tuple(f for f in Formulation if not f.filtered)


@dataclass(frozen=True)
class DiscreteCurrent:
    """Pyramid weights of the computed current.

    ``coefficients[n]`` is the weight of the pyramid at node ``n``; the
    modes satisfy ``J_n = sum_q Uhat_q exp(-j q phi_n)``.
    """

    coefficients: np.ndarray = field(repr=False)
    polarization: Polarization
    formulation: Formulation

    def __post_init__(self):
        if not np.all(np.isfinite(self.coefficients)):
            raise FloatingPointError(f"non-finite current for {self.formulation.value}")

    @property
    def modes(self) -> np.ndarray:
        return dft_modes(self.coefficients)


class _Spectra:
    """Numerical eigenvalues of the assembled matrices, in mode order."""

    def __init__(self, cfg: ProblemConfig):
        self.cfg = cfg

    def __call__(self, tag: Operator, wn: Wavenumber = Wavenumber.PHYSICAL) -> np.ndarray:
        if tag is Operator.FilteredHypersingular:
            return filtered_hypersingular_eigenvalues(self.cfg, wn)
        if tag is Operator.AdjDoubleLayer:
            # D and D* share their kernel on a circle
            tag = Operator.DoubleLayer
        return assemble(OperatorKind(tag, wn), self.cfg).dft_eigenvalues


def filtered_hypersingular_eigenvalues(cfg: ProblemConfig, wn: Wavenumber = Wavenumber.PHYSICAL) -> np.ndarray:
    """Galerkin eigenvalues of the ideally filtered hypersingular operator.

    The filter is defined on the continuous spectrum, so the matrix of the
    filtered operator is the pyramid projection of its truncated Fourier
    kernel: ``sum over |p| <= q_lim, p = q mod N of lam_p F_p^2``.
    """
    qlim = filter_cutoff(cfg)
    p = np.arange(-qlim, qlim + 1)
    lam = continuous_eigenvalue(OperatorKind(Operator.Hypersingular, wn), p, cfg)
    contrib = lam * pyramid_fourier_coeff(p, cfg.N) ** 2
    out = np.zeros(cfg.N, dtype=complex)
    np.add.at(out, np.mod(p, cfg.N), contrib)
    return mode_order(out)


def _system(form: Formulation, cfg: ProblemConfig, eig) -> tuple[np.ndarray, np.ndarray]:
    """System eigenvalues and the coefficients applied to each tested field.

    Returns ``(lam, weights)`` where ``weights`` maps fields to per-mode
    multipliers of their tested modes.
    """
    op, C, P = Operator, Wavenumber.COMPLEX, Wavenumber.PHYSICAL
    hyp = op.FilteredHypersingular if form.filtered else op.Hypersingular
    G = eig(op.Identity)
    jeta = 1j * cfg.eta
    pol, fam = form.polarization, form.family
    if pol is Polarization.TM:
        efie, e_rhs = eig(op.SingleLayer), (Field.E_z, 1 / jeta)
        mfie, m_rhs = G / 2 + eig(op.AdjDoubleLayer), (Field.H_t, 1.0)
        pre_e, pre_m = eig(hyp, C), G / 2 - eig(op.DoubleLayer, C)
    else:
        efie, e_rhs = eig(hyp), (Field.E_t, -1 / jeta)
        mfie, m_rhs = G / 2 - eig(op.DoubleLayer), (Field.H_z, -1.0)
        pre_e, pre_m = eig(op.SingleLayer, C), G / 2 + eig(op.AdjDoubleLayer, C)
    if fam is Family.EFIE:
        return efie, {e_rhs[0]: e_rhs[1] * np.ones_like(efie)}
    if fam is Family.MFIE:
        return mfie, {m_rhs[0]: m_rhs[1] * np.ones_like(mfie)}
    lam = (pre_e * efie + pre_m * mfie) / G
    return lam, {e_rhs[0]: e_rhs[1] * pre_e / G, m_rhs[0]: m_rhs[1] * pre_m / G}


def _check_singular(lam: np.ndarray, cfg: ProblemConfig, what: str) -> None:
    bad = np.abs(lam) < _HAZARD
    if np.any(bad):
        raise SingularModeError(what, cfg.modes[bad].tolist(), cfg.ka)


def system_eigenvalues(form: Formulation, cfg: ProblemConfig) -> np.ndarray:
    """Numerical eigenvalues of the system matrix, in mode order."""
    lam, _ = _system(form, cfg, _Spectra(cfg))
    return lam


def solve(form: Formulation, cfg: ProblemConfig) -> DiscreteCurrent:
    """Solve one formulation with assembled matrices and quadrature right-hand sides.

    The solve is diagonal in the DFT basis: ``Uhat_q = b_q / lam_q``.

    Raises
    ------
    SingularModeError
        If a system eigenvalue has magnitude below 1e-300.
    """
    lam, weights = _system(form, cfg, _Spectra(cfg))
    keep = np.ones(cfg.N, dtype=bool)
    if form.filtered and form.family is Family.EFIE:
        # the filtered operator is exactly zero past the cutoff: pseudo-inverse there
        keep = np.abs(cfg.modes) <= filter_cutoff(cfg)
    _check_singular(np.where(keep, lam, 1.0), cfg, f"system eigenvalue of {form.value}")
    rhs = sum(w * dft_modes(rhs_vector(fld, cfg)) for fld, w in weights.items())
    uhat = np.where(keep, rhs / np.where(keep, lam, 1.0), 0)
    return DiscreteCurrent(from_modes(uhat), form.polarization, form)


def system_matrix(form: Formulation, cfg: ProblemConfig) -> np.ndarray:
    """Dense system matrix rebuilt from the circulant eigenvalues (for checks)."""
    lam = system_eigenvalues(form, cfg)
    N = cfg.N
    row = np.fft.ifft(np.fft.ifftshift(lam))
    idx = np.arange(N)
    return row[np.mod(idx[None, :] - idx[:, None], N)]


def system_rhs(form: Formulation, cfg: ProblemConfig) -> np.ndarray:
    """Right-hand side vector matching :func:`system_matrix`."""
    _, weights = _system(form, cfg, _Spectra(cfg))
    return from_modes(sum(w * dft_modes(rhs_vector(fld, cfg)) for fld, w in weights.items()))


def far_field(current: DiscreteCurrent, cfg: ProblemConfig) -> np.ndarray:
    """Discrete scattering modes ``Rhat_q = R_q F_q Uhat_q / U_q`` over the band."""
    pol = current.polarization
    q = cfg.modes
    U = mie_current_coeff(pol, q, cfg)
    R = mie_scattering_coeff(pol, q, cfg)
    return R * pyramid_fourier_coeff(q, cfg.N) * current.modes / U


def condition_number(target: Formulation | OperatorKind, cfg: ProblemConfig, engine: str = "predicted",
                     exclude_resonant: float | None = None) -> float:
    """``max|lam| / min|lam|`` over the N modes of a system or operator matrix.

    Parameters
    ----------
    target : Formulation or OperatorKind
    engine : {"predicted", "numerical"}
        Closed-form aliased spectra or eigenvalues of the assembled matrices.
    exclude_resonant : float, optional
        Drop from the minimum the oscillatory modes whose resonance ratio
        (``|J/H|`` or ``|J'/H'|``) is below this value.  On a circle some
        hyperbolic mode is almost always close to a Bessel zero, which makes
        the plain ratio grow like ``ka^(4/3)`` for the single layer; the
        envelope growth is what remains after the exclusion.
    """
    if engine == "numerical":
        if isinstance(target, Formulation):
            lam = system_eigenvalues(target, cfg)
        elif target.is_base:
            lam = _Spectra(cfg)(target.tag, target.wavenumber)
        else:
            raise ValueError("numerical condition numbers of composite operators go through a Formulation")
    elif engine == "predicted":
        from .discretization import discrete_eigenvalue

        if isinstance(target, Formulation):
            lam = discrete_eigenvalue(target.system_operator, cfg.modes, cfg, filtered=target.filtered)
        else:
            lam = discrete_eigenvalue(target, cfg.modes, cfg)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    mag = np.abs(lam)
    _check_singular(mag, cfg, f"eigenvalue of {target}")
    low = mag
    if exclude_resonant is not None:
        op = target.system_operator if isinstance(target, Formulation) else target
        if op.tag in RESONANT_FACTOR:
            ratios = resonance_ratios(cfg.ka, RESONANT_FACTOR[op.tag])
            aq = np.abs(cfg.modes)
            inside = aq < len(ratios)
            keep = np.ones(len(mag), dtype=bool)
            keep[inside] = ratios[aq[inside]] >= exclude_resonant
            low = mag[keep]
    return float(mag.max() / low.min())


__all__ = [
    "CirculantOperatorMatrix",
    "DiscreteCurrent",
    "FORMULATIONS",
    "Family",
    "Formulation",
    "QuadratureConvergenceError",
    "SingularModeError",
    "UNFILTERED",
    "assemble",
    "assemble_dense",
    "beta3",
    "condition_number",
    "dft_modes",
    "far_field",
    "filtered_hypersingular_eigenvalues",
    "from_modes",
    "rhs_vector",
    "solve",
    "system_eigenvalues",
    "system_matrix",
    "system_rhs",
]
