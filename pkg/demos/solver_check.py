"""
Cross-check the Galerkin solver against the closed-form prediction.

Solves every formulation with assembled matrices and compares the measured
current error with the predicted one, then compares the circulant solve
with a dense LU solve of an element-by-element assembly.
"""
import numpy as np

from cylbem import FORMULATIONS, ProblemConfig, bem, current_error
from cylbem.spectra import kind

cfg = ProblemConfig.from_ka(12.3, harmonics=4)
print(f"ka={cfg.ka:g} N={cfg.N}")
for form in FORMULATIONS:
    p = current_error(form, cfg, engine="predicted")
    n = current_error(form, cfg, engine="numerical")
    print(f"  {form.value:11s} predicted {p:.4e} numerical {n:.4e} gap {abs(p - n) / n:.1%}")

S = bem.assemble(kind("SingleLayer"), cfg)
dense = bem.assemble_dense(kind("SingleLayer"), cfg)
print(f"single layer: circulant vs dense entries {np.max(np.abs(S.dense() - dense)):.1e}")
print(f"condition number TM-EFIE {bem.condition_number(bem.Formulation.TM_EFIE, cfg):.2f}, "
      f"TM-CCFIE {bem.condition_number(bem.Formulation.TM_CCFIE, cfg):.2f}")
