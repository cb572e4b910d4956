"""Continuous spectra of the boundary integral operators on a circle.

On a circle of radius ``a`` every operator of the TM/TE formulations is
diagonal in the Fourier basis ``exp(-j q phi)``, with eigenvalues built
from ``J_q`` and ``H_q^(2)`` at ``z = k a`` (or ``k~ a`` for the
preconditioning operators).  This module holds the problem
configuration, the operator catalogue and those closed forms, together
with the reference growth exponents used to judge slope fits.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .specfun import bessel_table

logger = logging.getLogger(__name__)

FREE_SPACE_IMPEDANCE = 376.730313668


class ConfigError(ValueError):
    """Invalid problem or sweep configuration."""


def mesh_count(ka: float, n_lambda: float) -> int:
    """Odd element count N with ``|N - n_lambda * ka| <= 1``."""
    target = n_lambda * ka
    n = 2 * int(round((target - 1.0) / 2.0)) + 1
    return max(3, n)


@dataclass(frozen=True)
class ProblemConfig:
    """Geometry, frequency and discretisation of one scattering problem.

    Parameters
    ----------
    a : float
        Cylinder radius (m).
    k : float
        Wavenumber (rad/m).
    N : int
        Number of boundary elements; must be odd.
    eta : float
        Background impedance (ohm).  Every relative error is independent of it.
    n_lambda : float, optional
        Nominal points per wavelength.  Defaults to ``N / (k a)``.
    harmonics : int
        Aliasing harmonics ``S`` kept in the discrete eigenvalue sum.
    quadrature : int
        Gauss-Legendre points per element used by the numerical engine.
    epsilon : float
        Safety margin of the hypersingular filter cutoff.
    """

    a: float = 1.0
    k: float = 1.0
    N: int = 5
    eta: float = FREE_SPACE_IMPEDANCE
    n_lambda: float | None = None
    harmonics: int = 1
    quadrature: int = 100
    epsilon: float = 0.1

    def __post_init__(self):
        if not (self.a > 0 and self.k > 0):
            raise ConfigError(f"radius and wavenumber must be positive (a={self.a}, k={self.k})")
        if self.N < 3 or self.N % 2 == 0:
            raise ConfigError(f"N must be an odd integer >= 3, got {self.N}")
        if self.harmonics < 0:
            raise ConfigError("harmonics must be >= 0")
        if self.quadrature < 1:
            raise ConfigError("quadrature order must be >= 1")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.eta <= 0:
            raise ConfigError("impedance must be positive")
        if self.n_lambda is None:
            object.__setattr__(self, "n_lambda", self.N / self.ka)
        elif abs(self.N - self.n_lambda * self.ka) > 1.0 + 1e-9:
            raise ConfigError(
                f"N={self.N} is not within one unit of n_lambda*ka={self.n_lambda * self.ka:.3f}"
            )

    @classmethod
    def from_ka(cls, ka: float, n_lambda: float = 4.0, a: float = 1.0, **kwargs) -> "ProblemConfig":
        """Configuration with ``N`` the odd integer nearest ``n_lambda * ka``."""
        return cls(a=a, k=ka / a, N=mesh_count(ka, n_lambda), n_lambda=n_lambda, **kwargs)

    @property
    def ka(self) -> float:
        return self.k * self.a

    @property
    def h(self) -> float:
        """Element arc length."""
        return 2 * math.pi * self.a / self.N

    @property
    def half_band(self) -> int:
        """Largest retained mode index ``(N - 1) / 2``."""
        return (self.N - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        """Retained mode indices ``q = -(N-1)/2 .. (N-1)/2``."""
        return np.arange(-self.half_band, self.half_band + 1)

    @property
    def ktilde(self) -> complex:
        return complex_wavenumber(self)

    def with_(self, **changes) -> "ProblemConfig":
        return replace(self, **changes)


def complex_wavenumber(cfg: ProblemConfig) -> complex:
    """Damped wavenumber ``k - 0.4 j k^(1/3) a^(-2/3)`` of the preconditioners."""
    return complex(cfg.k, -0.4 * cfg.k ** (1.0 / 3.0) * cfg.a ** (-2.0 / 3.0))


class Operator(enum.Enum):
    SingleLayer = "S"
    DoubleLayer = "D"
    AdjDoubleLayer = "D*"
    Hypersingular = "N"
    Identity = "I"
    TM_MFIO = "TM-MFIO"
    TE_MFIO = "TE-MFIO"
    TM_CEFIO = "TM-CEFIO"
    TM_CMFIO = "TM-CMFIO"
    TE_CEFIO = "TE-CEFIO"
    TE_CMFIO = "TE-CMFIO"
    TM_CCFIO = "TM-CCFIO"
    TE_CCFIO = "TE-CCFIO"
    FilteredHypersingular = "N_F"


class Wavenumber(enum.Enum):
    PHYSICAL = "k"
    COMPLEX = "ktilde"


BASE_OPERATORS = frozenset(
    {
        Operator.SingleLayer,
        Operator.DoubleLayer,
        Operator.AdjDoubleLayer,
        Operator.Hypersingular,
        Operator.Identity,
        Operator.FilteredHypersingular,
    }
)
# operators that are Calderon products; they mix k and ktilde internally
PRODUCT_OPERATORS = frozenset(
    {Operator.TM_CEFIO, Operator.TM_CMFIO, Operator.TE_CEFIO, Operator.TE_CMFIO}
)


@dataclass(frozen=True)
class OperatorKind:
    """An operator together with the wavenumber its kernel is evaluated at."""

    tag: Operator
    wavenumber: Wavenumber = Wavenumber.PHYSICAL

    def __post_init__(self):
        mixed = PRODUCT_OPERATORS | {Operator.TM_CCFIO, Operator.TE_CCFIO}
        if self.tag in mixed and self.wavenumber is not Wavenumber.PHYSICAL:
            raise ConfigError(f"{self.tag.name} mixes k and ktilde; it has no wavenumber choice")

    @property
    def is_base(self) -> bool:
        return self.tag in BASE_OPERATORS

    def argument(self, cfg: ProblemConfig) -> complex:
        """Bessel argument ``k a`` or ``k~ a`` for this kind."""
        if self.wavenumber is Wavenumber.COMPLEX:
            return cfg.ktilde * cfg.a
        return complex(cfg.ka)

    def expand(self) -> tuple:
        """Constituents of a composite kind, in a fixed order.

        Sums return ``("sum", a, b)``; Calderon products return
        ``("product", left, right)`` where the left factor uses k~.
        Base kinds return ``("base", self)``.
        """
        w = self.wavenumber
        t = Operator
        if self.tag is t.TM_MFIO:
            return ("sum", ("half", OperatorKind(t.Identity, w)), OperatorKind(t.AdjDoubleLayer, w))
        if self.tag is t.TE_MFIO:
            return ("diff", ("half", OperatorKind(t.Identity, w)), OperatorKind(t.DoubleLayer, w))
        ck, pk = Wavenumber.COMPLEX, Wavenumber.PHYSICAL
        if self.tag is t.TM_CEFIO:
            return ("product", OperatorKind(t.Hypersingular, ck), OperatorKind(t.SingleLayer, pk))
        if self.tag is t.TM_CMFIO:
            return ("product", OperatorKind(t.TE_MFIO, ck), OperatorKind(t.TM_MFIO, pk))
        if self.tag is t.TE_CEFIO:
            return ("product", OperatorKind(t.SingleLayer, ck), OperatorKind(t.Hypersingular, pk))
        if self.tag is t.TE_CMFIO:
            return ("product", OperatorKind(t.TM_MFIO, ck), OperatorKind(t.TE_MFIO, pk))
        if self.tag is t.TM_CCFIO:
            return ("sum", OperatorKind(t.TM_CEFIO), OperatorKind(t.TM_CMFIO))
        if self.tag is t.TE_CCFIO:
            return ("sum", OperatorKind(t.TE_CEFIO), OperatorKind(t.TE_CMFIO))
        return ("base", self)

    def __str__(self) -> str:
        suffix = "~" if self.wavenumber is Wavenumber.COMPLEX else ""
        return f"{self.tag.value}{suffix}"


def kind(tag: Operator | str, wavenumber: Wavenumber | str = Wavenumber.PHYSICAL) -> OperatorKind:
    """Convenience constructor accepting enum names or values."""
    if isinstance(tag, str):
        tag = Operator[tag] if tag in Operator.__members__ else Operator(tag)
    if isinstance(wavenumber, str):
        wavenumber = Wavenumber[wavenumber] if wavenumber in Wavenumber.__members__ else Wavenumber(wavenumber)
    return OperatorKind(tag, wavenumber)


def filter_cutoff(cfg: ProblemConfig) -> int:
    """``q_lim = floor((n_lambda - 1 - epsilon) k a)``."""
    return int(math.floor((cfg.n_lambda - 1.0 - cfg.epsilon) * cfg.ka))


# Bessel tables are cached per (argument, max order); rounding the order up
# lets consecutive requests at one argument share a table.
_ORDER_BLOCK = 64


def _table(z: complex, max_order: int):
    top = _ORDER_BLOCK * (max_order // _ORDER_BLOCK + 1)
    return bessel_table(complex(z), top)


def _base_values(tag: Operator, z: complex, q: np.ndarray) -> np.ndarray:
    """Closed-form eigenvalues of S, D, D*, N, I, MFIO at argument z."""
    if tag is Operator.Identity:
        return np.ones(q.shape, dtype=complex)
    aq = np.abs(q)
    tab = _table(z, int(aq.max()) if aq.size else 0)
    j, jp = tab.j[aq], tab.jp[aq]
    h, hp = tab.h2[aq], tab.h2p[aq]
    c = 1j * math.pi * z / 2
    if tag is Operator.SingleLayer:
        return -c * (j * h).to_complex()
    if tag is Operator.Hypersingular:
        return c * (jp * hp).to_complex()
    if tag in (Operator.DoubleLayer, Operator.AdjDoubleLayer):
        return -(c / 2) * ((jp * h) + (j * hp)).to_complex()
    if tag is Operator.TM_MFIO:
        return -c * (jp * h).to_complex()
    if tag is Operator.TE_MFIO:
        return c * (j * hp).to_complex()
    raise ValueError(f"{tag.name} is not a single-argument operator")


def continuous_eigenvalue(op: OperatorKind, q, cfg: ProblemConfig):
    """Eigenvalue ``lambda_q`` of the continuous operator ``op``.

    Parameters
    ----------
    op : OperatorKind
        Operator and wavenumber choice.  Composite Calderon kinds evaluate
        their factors at k~ (left) and k (right).
    q : int or array_like of int
        Mode indices; any integers, including aliased ones beyond the band.
    cfg : ProblemConfig

    Returns
    -------
    complex or ndarray of complex
    """
    qa = np.asarray(q, dtype=np.int64)
    out = _continuous(op, qa.reshape(-1), cfg).reshape(qa.shape)
    return complex(out) if out.ndim == 0 else out


def _continuous(op: OperatorKind, q: np.ndarray, cfg: ProblemConfig) -> np.ndarray:
    tag = op.tag
    if tag is Operator.FilteredHypersingular:
        vals = _base_values(Operator.Hypersingular, op.argument(cfg), q)
        return np.where(np.abs(q) <= filter_cutoff(cfg), vals, 0)
    if tag in PRODUCT_OPERATORS:
        _, left, right = op.expand()
        return _continuous(left, q, cfg) * _continuous(right, q, cfg)
    if tag in (Operator.TM_CCFIO, Operator.TE_CCFIO):
        _, left, right = op.expand()
        return _continuous(left, q, cfg) + _continuous(right, q, cfg)
    return _base_values(tag, op.argument(cfg), q)


@dataclass(frozen=True)
class SpectrumView:
    """Eigenvalues of one operator over the retained band ``q = -(N-1)/2..(N-1)/2``."""

    config: ProblemConfig
    kind: OperatorKind
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.shape != (self.config.N,):
            raise ValueError(f"expected {self.config.N} values, got {self.values.shape}")

    @property
    def modes(self) -> np.ndarray:
        return self.config.modes

    def __getitem__(self, q: int) -> complex:
        """Value at mode index ``q`` (not array position)."""
        if abs(q) > self.config.half_band:
            raise IndexError(f"mode {q} outside the retained band")
        return complex(self.values[q + self.config.half_band])

    @classmethod
    def continuous(cls, op: OperatorKind, cfg: ProblemConfig) -> "SpectrumView":
        return cls(cfg, op, continuous_eigenvalue(op, cfg.modes, cfg))


class Region(enum.Enum):
    hyperbolic = "hyperbolic"
    transition = "transition"
    elliptic = "elliptic"
    # index q ~ (n_lambda / 2) ka, the last retained mode
    edge = "edge"


class Part(enum.Enum):
    re = "re"
    im = "im"
    abs = "abs"


class NotTabulated(LookupError):
    """No growth exponent is known for this combination."""


_T = Fraction
_ALL = (Part.re, Part.im, Part.abs)


def _fill(table, tag, region, value, parts=_ALL):
    for p in parts:
        table[(tag, region, p)] = value


def _slope_table() -> dict:
    t: dict = {}
    op, rg = Operator, Region
    for tag in op:
        if tag in (op.FilteredHypersingular,) or tag in PRODUCT_OPERATORS:
            continue
        # large-argument expansions: every eigenvalue is O(1) away from resonances
        _fill(t, tag, rg.hyperbolic, _T(0))
    for region in rg:
        _fill(t, op.Identity, region, _T(0))
    # transition, growth in ka
    _fill(t, op.SingleLayer, rg.transition, _T(1, 3))
    _fill(t, op.Hypersingular, rg.transition, _T(-1, 3))
    for tag in (op.DoubleLayer, op.AdjDoubleLayer):
        t[(tag, rg.transition, Part.re)] = _T(-2, 3)
        t[(tag, rg.transition, Part.im)] = _T(0)
        t[(tag, rg.transition, Part.abs)] = _T(0)
        # elliptic decay in q
        t[(tag, rg.elliptic, Part.abs)] = _T(-3)
        t[(tag, rg.edge, Part.abs)] = _T(-1)
    for tag in (op.TM_MFIO, op.TE_MFIO):
        _fill(t, tag, rg.transition, _T(0))
        t[(tag, rg.elliptic, Part.abs)] = _T(0)
        t[(tag, rg.elliptic, Part.re)] = _T(0)
    # elliptic, growth in q
    t[(op.SingleLayer, rg.elliptic, Part.abs)] = _T(-1)
    t[(op.SingleLayer, rg.elliptic, Part.re)] = _T(-1)
    t[(op.Hypersingular, rg.elliptic, Part.abs)] = _T(1)
    t[(op.Hypersingular, rg.elliptic, Part.re)] = _T(1)
    # bandwidth edge q ~ (n_lambda/2) ka, growth in ka
    t[(op.SingleLayer, rg.edge, Part.abs)] = _T(0)
    t[(op.Hypersingular, rg.edge, Part.abs)] = _T(0)
    return t


_SLOPES = _slope_table()


def asymptotic_slope(op: OperatorKind | Operator, region: Region | str, part: Part | str = Part.abs) -> Fraction:
    """Reference growth exponent of an eigenvalue.

    In the hyperbolic, transition and edge regions the exponent is with
    respect to ``k a``; in the elliptic region it is with respect to the
    mode index ``q``.

    Raises
    ------
    NotTabulated
        If no exponent is known for the combination.
    """
    tag = op.tag if isinstance(op, OperatorKind) else op
    region = Region(region) if isinstance(region, str) else region
    part = Part(part) if isinstance(part, str) else part
    try:
        return _SLOPES[(tag, region, part)]
    except KeyError:
        raise NotTabulated(f"no growth exponent for {tag.name} / {region.value} / {part.value}") from None


class Polarization(enum.Enum):
    TM = "TM"
    TE = "TE"


class ResonantFactor(enum.Enum):
    """Bessel factor whose zeros are the interior resonances of an operator."""

    J = "J"
    JP = "J'"


RESONANT_FACTOR = {
    Operator.SingleLayer: ResonantFactor.J,
    Operator.TE_MFIO: ResonantFactor.J,
    Operator.Hypersingular: ResonantFactor.JP,
    Operator.FilteredHypersingular: ResonantFactor.JP,
    Operator.TM_MFIO: ResonantFactor.JP,
}

# Interior resonances of the oscillatory modes are ~ka apart in every unit of
# ka, so typical distances scale like 1/ka; the rule thresholds ka * distance.
RESONANCE_THRESHOLD = 1.0


def resonance_ratios(ka: float, factor: ResonantFactor, q_max: int | None = None) -> np.ndarray:
    """``|J_q / H_q|`` or ``|J'_q / H'_q|`` at ``ka`` for ``q = 0..q_max``.

    ``q_max`` defaults to ``floor(ka)``: past the turning point the ratio
    decays without further zeros, so it says nothing about resonances.
    """
    q_max = int(math.floor(ka)) if q_max is None else int(q_max)
    tab = _table(complex(ka), q_max)
    idx = np.arange(q_max + 1)
    if factor is ResonantFactor.J:
        ratio = tab.j[idx] / tab.h2[idx]
    else:
        ratio = tab.jp[idx] / tab.h2p[idx]
    return np.abs(ratio.to_complex())


def resonance_distance(ka: float, factor: ResonantFactor, q_max: int | None = None,
                       correction: np.ndarray | None = None) -> float:
    """Smallest resonance ratio over the oscillatory modes.

    ``correction`` multiplies the ratios mode by mode; the discrete rule
    passes ``|lam_hat_q / lam_q|`` so that the distance measures the
    discrete eigenvalue, whose zeros are shifted by the aliasing error.
    """
    r = resonance_ratios(ka, factor, q_max)
    if correction is not None:
        r = r * np.abs(correction)
    return float(np.min(r))


def is_near_resonance(distance: float, ka: float, threshold: float = RESONANCE_THRESHOLD) -> bool:
    """Masking rule for slope fits: ``ka * distance < threshold``."""
    return ka * distance < threshold


__all__ = [
    "BASE_OPERATORS",
    "ConfigError",
    "FREE_SPACE_IMPEDANCE",
    "NotTabulated",
    "Operator",
    "OperatorKind",
    "PRODUCT_OPERATORS",
    "Part",
    "Polarization",
    "ProblemConfig",
    "RESONANCE_THRESHOLD",
    "RESONANT_FACTOR",
    "Region",
    "ResonantFactor",
    "SpectrumView",
    "Wavenumber",
    "asymptotic_slope",
    "complex_wavenumber",
    "continuous_eigenvalue",
    "filter_cutoff",
    "is_near_resonance",
    "kind",
    "mesh_count",
    "resonance_distance",
    "resonance_ratios",
]
