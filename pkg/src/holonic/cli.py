"""Command-line front end.

    holonic run | picard | contraction | compare | print-default-config

Exit codes: 0 ok, 1 methods disagree (compare), 2 invalid config,
3 numeric failure, 4 Picard non-convergence, 5 contraction estimate >= 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from itertools import combinations
from pathlib import Path

import numpy as np

from holonic.config import RunConfig, default_config_text
from holonic.errors import ConfigError, NonConvergenceError, NumericError, UnsupportedRegimeError
from holonic.games import analytic_equilibrium
from holonic.learner import LearnerError, run
from holonic.solvers import contraction_estimate, picard_fixed_point
from holonic.streams import stream
from holonic.svg import convergence_svg

log = logging.getLogger("holonic")

EXIT_OK, EXIT_DISAGREE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_NONCONVERGENCE, EXIT_CONTRACTION = 0, 1, 2, 3, 4, 5
AGREEMENT_TOL = 0.02


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    cfg = cfg.with_overrides(
        seed=args.seed, iterations=args.iters, output_dir=args.out_dir, belief_mode=args.belief_mode
    )
    return cfg.validate()


def _out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.run.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_summary(cfg: RunConfig, summary: dict, extra_config: dict | None = None) -> Path:
    doc = {"config": cfg.to_dict()}
    if extra_config:
        doc["config"].update(extra_config)
    doc.update(summary)
    path = _out_dir(cfg) / "summary.json"
    path.write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _reference(game):
    try:
        return game.equilibrium()
    except UnsupportedRegimeError as exc:
        log.warning("no closed-form reference: %s", exc)
        return None


def _run_learner(cfg: RunConfig, game, force_numeric: bool, reference):
    lc = cfg.learner
    return run(
        game,
        cfg.schedule(),
        cfg.solver,
        lc.iterations,
        lc.n_samples,
        cfg.run.seed,
        reference=reference,
        mode=lc.belief_mode,
        options=cfg.learner_options(force_numeric),
    )


def _state_summary(state) -> dict:
    return {
        "final_t": state.t,
        "final_theta0_avg": float(state.profile.intercepts.mean()),
        "final_theta1_avg": float(state.profile.slopes.mean()),
        "final_theta": state.profile.theta.tolist(),
        "final_belief_means": state.beliefs.means().tolist(),
        "final_beliefs": [b.summary() for b in state.beliefs.beliefs],
    }


# --------------------------------------------------------------------------
# commands


def cmd_run(args) -> int:
    cfg = _load(args)
    game = cfg.build_game()
    game.warn_outcome_range()
    reference = _reference(game)
    state, trace = _run_learner(cfg, game, args.force_numeric_br, reference)
    out = _out_dir(cfg)
    trace.to_csv(out / "trace.csv")
    summary = _state_summary(state)
    summary["reference"] = reference.as_dict() if reference is not None else None
    if args.emit_svg:
        (out / "convergence.svg").write_text(convergence_svg(trace, reference))
    _write_summary(cfg, summary, {"force_numeric_br": args.force_numeric_br})
    print(
        f"t={state.t} theta0_avg={summary['final_theta0_avg']:.6f} "
        f"theta1_avg={summary['final_theta1_avg']:.6f} "
        f"belief_means={np.round(state.beliefs.means(), 6).tolist()}"
    )
    return EXIT_OK


def cmd_picard(args) -> int:
    cfg = _load(args)
    game = cfg.build_game()
    try:
        result = picard_fixed_point(
            game, cfg.solver, cfg.learner.belief_mode, stream(cfg.run.seed, "picard"),
            cfg.learner.n_samples, force_numeric=args.force_numeric_br,
        )
    except NonConvergenceError as exc:
        _write_summary(cfg, {"picard_converged": False, "picard_iterations": exc.iterations, "picard_distance": exc.distance})
        print(str(exc), file=sys.stderr)
        return EXIT_NONCONVERGENCE
    summary = {
        "picard_converged": True,
        "picard_means": result.means.tolist(),
        "picard_iterations": result.iterations,
        "picard_residuals": result.residuals,
        "picard_theta0_avg": float(result.profile.intercepts.mean()),
        "picard_theta1_avg": float(result.profile.slopes.mean()),
    }
    _write_summary(cfg, summary, {"force_numeric_br": args.force_numeric_br})
    print(f"converged in {result.iterations} iterations: means={result.means.tolist()}")
    return EXIT_OK


def cmd_contraction(args) -> int:
    cfg = _load(args)
    game = cfg.build_game()
    estimate = contraction_estimate(
        game, cfg.solver, args.trials, stream(cfg.run.seed, "contraction"),
        mode=cfg.learner.belief_mode, n_samples=cfg.learner.n_samples, force_numeric=args.force_numeric_br,
    )
    certified = estimate < 1.0
    _write_summary(cfg, {"contraction_estimate": estimate, "contraction_trials": args.trials, "uniqueness_certified": certified})
    print(f"contraction estimate: {estimate:.10g}")
    if not certified:
        print("uniqueness regime not certified (estimate >= 1)", file=sys.stderr)
        return EXIT_CONTRACTION
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    game = cfg.build_game()
    rows = []

    g = cfg.game
    if game.kind == "public_good" and getattr(game, "symmetric", False):
        t0 = time.perf_counter()
        try:
            slope, intercept, m = analytic_equilibrium(game.params[0], game.M, game.n, game.types.mean)
        except UnsupportedRegimeError as exc:
            log.warning("analytic equilibrium unavailable: %s", exc)
        else:
            rows.append(_row("analytic", [m] * g.M, intercept, slope, time.perf_counter() - t0))
    else:
        t0 = time.perf_counter()
        eq = _reference(game)
        if eq is not None:
            rows.append(_row("analytic", eq.means, eq.theta0_avg, eq.theta1_avg, time.perf_counter() - t0))

    t0 = time.perf_counter()
    try:
        pic = picard_fixed_point(
            game, cfg.solver, cfg.learner.belief_mode, stream(cfg.run.seed, "picard"),
            cfg.learner.n_samples, force_numeric=args.force_numeric_br,
        )
    except NonConvergenceError as exc:
        log.warning("%s", exc)
    else:
        rows.append(_row("picard", pic.means, pic.profile.intercepts.mean(), pic.profile.slopes.mean(), time.perf_counter() - t0))

    t0 = time.perf_counter()
    state, _ = _run_learner(cfg, game, args.force_numeric_br, None)
    rows.append(_row("two_timescale", state.beliefs.means(), state.profile.intercepts.mean(), state.profile.slopes.mean(), time.perf_counter() - t0))

    gaps = _pairwise_gaps(rows)
    agree = len(rows) >= 2 and all(v["belief_gap"] < AGREEMENT_TOL and v["theta_gap"] < AGREEMENT_TOL for v in gaps.values())
    _write_summary(cfg, {"comparison": rows, "pairwise_gaps": gaps, "agree": agree}, {"force_numeric_br": args.force_numeric_br})

    print(f"{'method':<14} {'theta0_avg':>11} {'theta1_avg':>11} {'wall_s':>8}  belief_means")
    for r in rows:
        print(f"{r['method']:<14} {r['theta0_avg']:>11.6f} {r['theta1_avg']:>11.6f} {r['wall_time_s']:>8.3f}  {np.round(r['belief_means'], 6).tolist()}")
    for pair, v in gaps.items():
        print(f"{pair}: belief gap {v['belief_gap']:.3e}, theta gap {v['theta_gap']:.3e}")
    return EXIT_OK if agree else EXIT_DISAGREE


def _row(method, means, theta0, theta1, wall):
    return {
        "method": method,
        "belief_means": [float(v) for v in means],
        "theta0_avg": float(theta0),
        "theta1_avg": float(theta1),
        "wall_time_s": float(wall),
    }


def _pairwise_gaps(rows) -> dict:
    out = {}
    for a, b in combinations(rows, 2):
        out[f"{a['method']}-{b['method']}"] = {
            "belief_gap": float(np.max(np.abs(np.subtract(a["belief_means"], b["belief_means"])))),
            "theta_gap": max(abs(a["theta0_avg"] - b["theta0_avg"]), abs(a["theta1_avg"] - b["theta1_avg"])),
        }
    return out


def cmd_print_default_config(args) -> int:
    sys.stdout.write(default_config_text())
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="config file (defaults used when omitted)")
    common.add_argument("--seed", type=int, help="root seed (unsigned 64-bit)")
    common.add_argument("--iters", type=int, help="learner iterations")
    common.add_argument("--out-dir", metavar="PATH", help="output directory")
    common.add_argument("--belief-mode", choices=("particle", "moment"))
    common.add_argument("--emit-svg", action="store_true", help="write convergence.svg (run)")
    common.add_argument("--force-numeric-br", action="store_true", help="use numeric best responses")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="holonic", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="two-timescale learner").set_defaults(func=cmd_run)
    sub.add_parser("picard", parents=[common], help="Picard fixed-point solver").set_defaults(func=cmd_picard)
    p = sub.add_parser("contraction", parents=[common], help="empirical contraction modulus")
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_contraction)
    sub.add_parser("compare", parents=[common], help="analytic vs Picard vs learner").set_defaults(func=cmd_compare)
    sub.add_parser("print-default-config", help="print the embedded defaults").set_defaults(func=cmd_print_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, LearnerError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
