"""Empirical contraction modulus of the Picard map over a (gamma, rho) grid.

Estimates below 1 are evidence for the uniqueness regime; the table marks
cells where the estimate reaches 1.

    python scripts/contraction_sweep.py --D 1.5 --trials 50
"""

import argparse

import numpy as np

from holonic.errors import ConfigError
from holonic.games import PublicGoodGame, PublicGoodParams
from holonic.solvers import SolverConfig, contraction_estimate
from holonic.streams import stream


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--D", type=float, default=3.0)
    ap.add_argument("--kappa", type=float, default=0.2)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--gammas", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3, 0.39])
    ap.add_argument("--rhos", type=float, nargs="+", default=[0.0, 0.5, 1.0, 2.0, 5.0, 10.0])
    args = ap.parse_args()

    cfg = SolverConfig()
    print("gamma \\ rho " + "".join(f"{r:>10g}" for r in args.rhos))
    for g in args.gammas:
        cells = []
        for r in args.rhos:
            try:
                game = PublicGoodGame(3, 5, PublicGoodParams(args.D, args.kappa, g, r))
            except ConfigError:
                cells.append(f"{'invalid':>10}")
                continue
            est = contraction_estimate(game, cfg, args.trials, stream(args.seed, "contraction"))
            cells.append(f"{est:>9.4f}{'*' if est >= 1 else ' '}")
        print(f"{g:>11g} " + "".join(cells))
    print("* estimate >= 1: uniqueness not certified")
    print(f"reference at rho = 0: gamma (M - 1) = {np.round(2 * np.array(args.gammas), 4).tolist()}")


if __name__ == "__main__":
    main()
