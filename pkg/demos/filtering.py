"""
Spectral filtering of the hypersingular operator.

Shows which modes the filter keeps, where the filtered aliasing error
vanishes, and what that does to the TE current and far-field errors.
"""
import numpy as np

from cylbem import Formulation, ProblemConfig, error_report, filter_cutoff, kind, spectral_error
from cylbem.discretization import alias_free_band

for ka in (20.0, 80.0, 320.0):
    cfg = ProblemConfig.from_ka(ka)
    q = cfg.modes[cfg.modes >= 0]
    ea = np.abs(spectral_error(kind("Hypersingular"), q, cfg, filtered=True).aliasing)
    band = alias_free_band(cfg)
    print(f"ka={ka:g} N={cfg.N} q_lim={filter_cutoff(cfg)} alias-free band |q|<={band}")
    print(f"  filtered |EA| max inside band {ea[q <= band].max():.1e}, outside {ea[q > band].max():.1e}")
    for form in (Formulation.TE_EFIE, Formulation.TE_EFIE_F, Formulation.TE_CCFIE_F):
        r = error_report(form, cfg)
        flag = " (near resonance)" if r.masked else ""
        print(f"  {form.value:11s} L2 {r.measures['L2']:.3e}  S_L2 {r.measures['S_L2']:.3e}{flag}")
