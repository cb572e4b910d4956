"""
Pollution of the TE-EFIE current at fixed mesh density, and its cure.

Compares the relative L2 current error of the TE-EFIE and TE-CCFIE over a
log-spaced frequency sweep at 4 and 8 points per wavelength.  Samples
close to an interior resonance are flagged with ``*`` and left out of the
slope fits.
"""
import argparse

import numpy as np

from cylbem import Formulation, ProblemConfig, error_report, fit_slope
from cylbem.cli import ka_grid


def sweep(form, n_lambda, ka):
    reps = [error_report(form, ProblemConfig.from_ka(k, n_lambda=n_lambda)) for k in ka]
    return np.array([r.measures["L2"] for r in reps]), np.array([r.masked for r in reps])


def main():
    p = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    p.add_argument("--points", type=int, default=30)
    p.add_argument("--ka-stop", type=float, default=400.0)
    args = p.parse_args()

    ka = ka_grid(30.0, args.ka_stop, args.points)
    cases = [(f, n) for n in (4.0, 8.0) for f in (Formulation.TE_EFIE, Formulation.TE_CCFIE)]
    results = {c: sweep(*c, ka) for c in cases}

    head = "".join(f"{f.value + ' n' + str(int(n)):>18s}" for f, n in cases)
    print(f"{'ka':>8s}{head}")
    for i, k in enumerate(ka):
        cells = "".join(f"{v[i]:17.4e}{'*' if m[i] else ' '}" for v, m in results.values())
        print(f"{k:8.2f}{cells}")
    print()
    for (f, n), (v, m) in results.items():
        fit = fit_slope(ka, v, m, min_points=5)
        print(f"{f.value:9s} n_lambda={n:g}: slope {fit.slope:+.3f} from {fit.points} points")


if __name__ == "__main__":
    main()
