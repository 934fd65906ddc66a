"""How much saturation mass stays in the inflow band 0.3 < z <= 0.7 for the reduced model.

Scans the vertical regularization strength to separate its smoothing from the
vertical spreading caused by the flow itself.
"""
import argparse

import numpy as np

from brinkve.bve import run_bve
from brinkve.core import DimensionlessParams
from brinkve.grid import GridSpec


def band_fraction(S, grid):
    """Share of the total saturation mass inside the horizontal strip of the band."""
    band = (grid.z_centers > 0.3) & (grid.z_centers <= 0.7)
    return float(np.sum(S[:, band]) / np.sum(S))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=250)
    ap.add_argument("--nz", type=int, default=50)
    ap.add_argument("--end-time", type=float, default=0.1)
    ap.add_argument("--beta1", type=float, default=4e-4)
    ap.add_argument("--beta2", type=float, nargs="+", default=[0.0, 4e-4, 1e-2, 0.25, 6.25])
    args = ap.parse_args()

    grid = GridSpec(args.nx, args.nz)
    for beta2 in args.beta2:
        beta1 = min(args.beta1, beta2)
        gamma = np.sqrt(beta1 / beta2) if beta2 > 0 else 1.0
        params = DimensionlessParams(gamma=gamma, beta1=beta1, beta2=beta2,
                                     end_time_T=args.end_time)
        traj = run_bve(params, grid=grid)
        frac = band_fraction(traj.final.S, grid)
        print(f"beta1={beta1:<8g} beta2={beta2:<8g} in-band fraction {frac:.3f}")


if __name__ == "__main__":
    main()
