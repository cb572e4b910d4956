"""
Walk through the discrete spectrum of the layer operators on a circle.

For a few frequencies at four points per wavelength, print the projection
and aliasing parts of the relative eigenvalue error in the hyperbolic,
transition and elliptic regions, then fit their growth at the transition
point ``q = ka``.
"""
import numpy as np

from cylbem import ProblemConfig, fit_slope, kind, spectral_error
from cylbem.cli import ka_grid

OPERATORS = ("SingleLayer", "DoubleLayer", "Hypersingular", "TM_CCFIO")


def region_table(ka):
    cfg = ProblemConfig.from_ka(ka)
    q = np.array([0, int(ka) // 2, int(ka), int(1.5 * ka)])
    print(f"\nka = {ka:g}, N = {cfg.N}, modes {q.tolist()}")
    for name in OPERATORS:
        e = spectral_error(kind(name), q, cfg)
        cells = "  ".join(f"{abs(p):8.2e}/{abs(a):8.2e}" for p, a in zip(e.projection, e.aliasing))
        print(f"  {name:14s} |EP|/|EA|  {cells}")


def transition_slopes():
    ka = ka_grid(30, 400, 40, spacing="integer")
    print("\ngrowth of |EA| at q = ka over ka in [30, 400]")
    for name in OPERATORS:
        vals = [abs(spectral_error(kind(name), int(k), ProblemConfig.from_ka(k)).aliasing) for k in ka]
        fit = fit_slope(ka, vals)
        print(f"  {name:14s} slope {fit.slope:+.3f} +- {fit.stderr:.3f}")


if __name__ == "__main__":
    for ka in (10.0, 50.0, 200.0):
        region_table(ka)
    transition_slopes()
