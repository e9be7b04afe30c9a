"""Recovery rate of backward stepwise regression on planted sparse problems.

Sweeps the noise level and the solver; a seed counts as recovered when the
final active set equals the planted support.

Usage: ``python scripts/planted_recovery.py [--seeds 20]``
"""

import argparse
import warnings
from types import SimpleNamespace

import numpy as np

from graphrom.regression import LossSpec, SolverSpec, stepwise_backward
from graphrom.synth import planted_problem


def recovered(seed, noise, solver, n_features=20, n_active=5):
    prob = planted_problem(seed, n=200, n_features=n_features, n_active=n_active, noise=noise)
    basis = SimpleNamespace(X=prob.X, y=prob.y, labels=prob.names, fixed_mask=np.zeros(n_features, bool))
    trace = stepwise_backward(basis, solver, LossSpec(), min_terms=n_active)
    return tuple(trace.final.active) == prob.active


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args(argv)
    solvers = {"ols": SolverSpec("ols"), "ridge 1e-3": SolverSpec("ridge", 1e-3)}
    noises = (1e-3, 1e-1, 0.5, 1.0, 2.0, 4.0)
    print(f"{'noise':>8}" + "".join(f"{name:>12}" for name in solvers))
    for noise in noises:
        cells = []
        for solver in solvers.values():
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                hits = sum(recovered(s, noise, solver) for s in range(args.seeds))
            cells.append(f"{hits}/{args.seeds}")
        print(f"{noise:>8g}" + "".join(f"{c:>12}" for c in cells))


if __name__ == "__main__":
    main()
