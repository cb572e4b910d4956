"""Spectral error analysis of BEM scattering by a PEC circular cylinder.

The package pairs closed-form eigenvalues of the 2D Helmholtz boundary
integral operators on a circle with a Galerkin solver on the same mesh,
so predicted and measured discretization errors can be compared mode by
mode as the frequency grows at a fixed number of points per wavelength.

Modules
-------
specfun
    Integer-order Bessel and Hankel functions of complex argument.
spectra
    Problem configuration, operator catalogue and continuous eigenvalues.
discretization
    Aliased discrete eigenvalues and their projection/aliasing split.
excitation
    Plane-wave incidence and the exact (Mie) surface current.
bem
    Circulant Galerkin assembly with pyramid basis functions and FFT solves.
analysis
    Current and far-field error measures, masking and slope fits.
cli
    Frequency sweeps to CSV with slope summaries and plot scripts.

Examples
--------
>>> from cylbem import Formulation, ProblemConfig, current_error
>>> cfg = ProblemConfig.from_ka(50.0)
>>> err = current_error(Formulation.TE_CCFIE, cfg)
"""

from .analysis import ErrorReport, Norm, current_error, error_report, fit_slope, scattering_error
from .bem import FORMULATIONS, Formulation, condition_number, solve
from .discretization import discrete_eigenvalue, spectral_error
from .spectra import ConfigError, OperatorKind, ProblemConfig, continuous_eigenvalue, filter_cutoff, kind

__version__ = "0.1.0"

__all__ = [
    "FORMULATIONS",
    "ConfigError",
    "ErrorReport",
    "Formulation",
    "Norm",
    "OperatorKind",
    "ProblemConfig",
    "condition_number",
    "continuous_eigenvalue",
    "current_error",
    "discrete_eigenvalue",
    "error_report",
    "filter_cutoff",
    "fit_slope",
    "kind",
    "scattering_error",
    "solve",
    "spectral_error",
]
