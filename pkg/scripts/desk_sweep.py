"""Desk-scale gamma sweep: full model per gamma against the reduced model.

    python3 scripts/desk_sweep.py --out runs/desk --nx 250 --nz 50 --end-time 0.1
"""
import argparse
import logging

from brinkve.config import parse_config
from brinkve.experiments import gamma_sweep

TEMPLATE = """
[grid]
nx = {nx}
nz = {nz}
[model]
model = both
gamma_list = {gammas}
end_time = {end_time!r}
[physical]
length_L = 5
effective_viscosity_mue = 1e-2
[output]
workers = {workers}
"""


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--nx", type=int, default=250)
    ap.add_argument("--nz", type=int, default=50)
    ap.add_argument("--end-time", type=float, default=0.1)
    ap.add_argument("--gammas", default="1, 1/5, 1/25")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = parse_config(TEMPLATE.format(nx=args.nx, nz=args.nz, gammas=args.gammas,
                                       end_time=args.end_time, workers=args.workers))
    result = gamma_sweep(cfg, args.out)
    print(f"{'gamma':>8} {'e(gamma)':>12} {'|dp/dz|':>12} {'|Q|':>12} {'mass res':>10}")
    for r in result.rows:
        print(f"{r['gamma']:8.4f} {r['e_gamma']:12.4e} {r['grad_pz_norm']:12.4e} "
              f"{r['q_norm']:12.4e} {r['mass_residual_max']:10.2e}")
    e = result.errors
    print(f"strictly decreasing: {result.monotone}", end="")
    print(f"; e(last)/e(first) = {e[-1] / e[0]:.3f}" if len(e) > 1 and e[0] > 0 else "")
    if result.partial:
        print(f"sweep incomplete: {result.error}")
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
