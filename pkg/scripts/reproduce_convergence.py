"""Run the two-timescale learner on the public-good game and chart convergence
against the closed-form equilibrium (belief means on top, strategy parameters
below, analytic values dashed).

    python scripts/reproduce_convergence.py --out out/convergence
"""

import argparse
from pathlib import Path

import numpy as np

from holonic.games import PublicGoodGame, PublicGoodParams
from holonic.learner import LearnerOptions, StepSchedule, run
from holonic.solvers import SolverConfig
from holonic.svg import convergence_svg


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="out/convergence")
    ap.add_argument("--iters", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--mode", choices=("moment", "particle"), default="moment")
    ap.add_argument("--rho", type=float, default=0.0)
    ap.add_argument("--samples", type=int, default=256)
    ap.add_argument("--numeric-br", action="store_true", help="numeric best responses (slow)")
    args = ap.parse_args()

    game = PublicGoodGame(3, 5, PublicGoodParams(rho=args.rho))
    eq = game.equilibrium()
    state, trace = run(
        game, StepSchedule(), SolverConfig(), args.iters, args.samples, args.seed,
        reference=eq, mode=args.mode, options=LearnerOptions(force_numeric=args.numeric_br),
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / "trace.csv")
    (out / "convergence.svg").write_text(convergence_svg(trace, eq))

    print(f"reference: theta1={eq.theta1_avg:.6f} theta0={eq.theta0_avg:.6f} E[omega]={eq.means.tolist()}")
    print(f"learner:   theta1={state.profile.slopes.mean():.6f} theta0={state.profile.intercepts.mean():.6f} "
          f"E[omega]={np.round(state.beliefs.means(), 6).tolist()}")
    d = trace.column("d_t")
    for t in (0, 10, 100, 1000, args.iters - 1):
        if t < len(d):
            print(f"  t={t:>5}  d_t={d[t]:.3e}")
    print(f"wrote {out / 'trace.csv'} and {out / 'convergence.svg'}")


if __name__ == "__main__":
    main()
