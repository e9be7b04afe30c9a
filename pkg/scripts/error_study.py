"""Convergence orders of modified Taylor models for k = 1..3 over random polynomial targets.

Prints one row per (k, seed) with the fitted slopes of the total L2 model error
for exact derivatives and for non-local derivatives with fitted gammas.

Usage: ``python scripts/error_study.py [--seeds 5] [--L 1.0]``
"""

import argparse

import numpy as np

from graphrom.errorlab import PolySpec, convergence_study


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--L", type=float, default=1.0)
    ap.add_argument("--n-list", default="8,16,32,64,128,256")
    return ap.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    ns = [int(v) for v in args.n_list.split(",")]
    print(f"{'k':>2} {'seed':>4} {'differential':>13} {'nonlocal':>9} {'nonlocal L2 at n_max':>21}")
    for k in (1, 2, 3):
        slopes = []
        for seed in range(args.seeds):
            spec = PolySpec.random(k + 1, seed)
            d = convergence_study(spec, k, args.L, ns, mode="differential")
            n = convergence_study(spec, k, args.L, ns, mode="nonlocal")
            slopes.append((d.slope, n.slope))
            print(f"{k:>2} {seed:>4} {d.slope:>13.4f} {n.slope:>9.4f} {n.errors['2'][-1]:>21.3e}")
        mean = np.nanmean(slopes, axis=0)
        print(f"{k:>2} mean {mean[0]:>13.4f} {mean[1]:>9.4f}")


if __name__ == "__main__":
    main()
