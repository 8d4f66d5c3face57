"""Acceptance suite: each test checks one criterion at its stated tolerance and
reports a single PASS/FAIL line (collected again in the terminal summary)."""

import json
import time

import numpy as np
import pytest

from holonic.cli import main
from holonic.games import PublicGoodGame, PublicGoodParams, analytic_equilibrium, decoupled_game
from holonic.learner import LearnerState, StepSchedule, run, schedule_checks, step
from holonic.measures import BeliefProfile, ParticleMeasure, mixture, pushforward, wasserstein1
from holonic.model import StrategyProfile
from holonic.solvers import SolverConfig, contraction_estimate, picard_fixed_point
from holonic.errors import ConfigError, NonConvergenceError
from holonic.streams import stream

SOLVER = SolverConfig()
BASE = PublicGoodGame(3, 5, PublicGoodParams(D=3.0, kappa=0.2, gamma=0.1, rho=0.0))
SEED = 7


@pytest.fixture(scope="module")
def baseline_run():
    t0 = time.perf_counter()
    state, trace = run(BASE, StepSchedule(), SOLVER, 5000, 256, SEED, reference=BASE.equilibrium())
    return state, trace, time.perf_counter() - t0


def test_criterion_01_closed_form_reproduction(baseline_run, acceptance):
    state, trace, wall = baseline_run
    th1, th0 = state.profile.slopes.mean(), state.profile.intercepts.mean()
    means = state.beliefs.means()
    d = trace.column("d_t")
    ok = (
        abs(th1 + 0.2) < 0.02
        and abs(th0 - 0.6) < 0.02
        and bool(np.all(np.abs(means - 0.125) < 0.02))
        and wall < 30.0
        and d[-1] < d[0]
    )
    acceptance(1, ok, f"theta1_avg={th1:.5f} theta0_avg={th0:.5f} means={np.round(means, 5).tolist()} wall={wall:.1f}s")


@pytest.mark.parametrize("rho", [0.0, 0.5])
def test_criterion_02_oracle_triangle(rho, tmp_path, acceptance):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(f"[game]\nrho = {rho!r}\n")
    out = tmp_path / "out"
    code = main(["compare", "--config", str(cfg), "--out-dir", str(out)])
    summary = json.loads((out / "summary.json").read_text())
    methods = [r["method"] for r in summary["comparison"]]
    gaps = summary["pairwise_gaps"]
    worst = max(max(v["belief_gap"], v["theta_gap"]) for v in gaps.values())
    ok = code == 0 and methods == ["analytic", "picard", "two_timescale"] and worst < 0.02
    acceptance(2, ok, f"rho={rho}: exit {code}, largest pairwise gap {worst:.2e}")


def test_criterion_03_picard_exactness(acceptance):
    res = picard_fixed_point(BASE, SOLVER, "moment", stream(SEED, "picard"))
    with pytest.raises(NonConvergenceError) as first:
        picard_fixed_point(BASE, SolverConfig(max_picard_iterations=1), "moment", stream(SEED, "picard"))
    # from zero beliefs the first residual is the first iterate itself
    first_iterate = first.value.distance
    ok = (
        bool(np.all(np.abs(res.means - 0.125) <= 1e-10))
        and res.iterations <= 50
        and abs(res.residuals[0] - 0.1) <= 1e-15
        and abs(first_iterate - 0.1) <= 1e-15
    )
    acceptance(3, ok, f"means={res.means.tolist()} iterations={res.iterations} first iterate={first_iterate!r}")


def test_criterion_04_contraction_evidence(acceptance):
    est = contraction_estimate(BASE, SOLVER, 100, stream(SEED, "contraction"))
    decoupled = PublicGoodGame(3, 5, PublicGoodParams(gamma=0.0))
    zero = contraction_estimate(decoupled, SOLVER, 100, stream(SEED, "contraction"))
    ok = abs(est - 0.2) <= 1e-6 and zero == 0.0
    acceptance(4, ok, f"baseline estimate={est!r} (target 0.2), gamma=0 estimate={zero!r}")


def test_criterion_05_fixed_point_stationarity(acceptance):
    eq = BASE.equilibrium()
    state = LearnerState(0, eq.profile(BASE.n), BeliefProfile.from_means(eq.means, "moment"), SEED)
    new = step(BASE, state, StepSchedule(), SOLVER, 256)
    dtheta = new.profile.distance(state.profile)
    dmean = float(np.max(np.abs(new.beliefs.means() - state.beliefs.means())))
    acceptance(5, dtheta <= 1e-12 and dmean <= 1e-12, f"max theta change={dtheta:.2e}, max belief-mean change={dmean:.2e}")


@pytest.mark.parametrize("rho", [0.0, 0.5])
def test_criterion_06_timescale_separation(rho, baseline_run, acceptance):
    # at rho = 0 the best response ignores beliefs; rho = 0.5 makes it track them
    game = BASE if rho == 0.0 else PublicGoodGame(3, 5, PublicGoodParams(rho=rho))
    if rho == 0.0:
        trace = baseline_run[1]
    else:
        trace = run(game, StepSchedule(), SOLVER, 5000, 256, SEED)[1]
    eps = trace.column("eps_t")
    early, late = eps[:1000].mean(), eps[4000:5000].mean()
    narrow = run(game, StepSchedule(exponent_alpha=0.8, exponent_beta=0.9), SOLVER, 5000, 256, SEED)[1]
    wide = run(game, StepSchedule(exponent_alpha=0.6, exponent_beta=0.9), SOLVER, 5000, 256, SEED)[1]
    late_narrow = narrow.column("eps_t")[4000:].mean()
    late_wide = wide.column("eps_t")[4000:].mean()
    ok = late < early and late_wide < late_narrow
    acceptance(
        6, ok,
        f"rho={rho}: eps early={early:.3e} late={late:.3e}; late eps gap 0.1={late_narrow:.3e} gap 0.3={late_wide:.3e}",
    )


def test_criterion_07_metric_and_measure(acceptance):
    rng = np.random.default_rng(SEED)

    def random_measure():
        k = int(rng.integers(1, 20))
        return ParticleMeasure.normalized(rng.normal(size=k), rng.uniform(0.01, 1, k))

    worst_slack, worst_sym, identity_ok = np.inf, 0.0, True
    for _ in range(1000):
        a, b, c = random_measure(), random_measure(), random_measure()
        ab, bc, ac = wasserstein1(a, b), wasserstein1(b, c), wasserstein1(a, c)
        worst_slack = min(worst_slack, ab + bc - ac)
        worst_sym = max(worst_sym, abs(ab - wasserstein1(b, a)))
        identity_ok &= wasserstein1(a, a) == 0.0 and ab >= 0.0

    profile = StrategyProfile.constant(3, 5, -0.2, 0.6)
    n = 10**5
    q = pushforward(BASE, 0, profile, BeliefProfile.constant(3, 0.125, "particle"), n, stream(SEED, "pushforward"))
    sigma = np.sqrt((1 / 1500) / n)
    z = abs(q.mean - 0.125) / sigma

    lin_err = 0.0
    for _ in range(200):
        a, b, beta = random_measure(), random_measure(), float(rng.uniform())
        lin_err = max(lin_err, abs(mixture(a, b, beta).mean - ((1 - beta) * a.mean + beta * b.mean)))
    dyadic = mixture(ParticleMeasure.uniform([0.25, 0.75]), ParticleMeasure.uniform([0.5, 1.0, 0.125, 0.375]), 0.5)
    exact = dyadic.mean == 0.5 * 0.5 + 0.5 * 0.5

    ok = worst_slack >= -1e-12 and worst_sym <= 1e-12 and identity_ok and z < 3 and lin_err <= 1e-12 and exact
    acceptance(
        7, ok,
        f"triangle slack min={worst_slack:.2e}, pushforward z={z:.2f}, mixture mean error max={lin_err:.1e}",
    )


def test_criterion_08_schedule_validity(acceptance):
    checks = schedule_checks(StepSchedule())
    try:
        StepSchedule(exponent_alpha=0.9, exponent_beta=0.6)
        rejected = False
    except ConfigError:
        rejected = True
    acceptance(
        8, checks["all_pass"] and rejected,
        f"checks all_pass={checks['all_pass']} ratio@1e6={checks['ratio_at_horizon']:.4f}, swapped rejected={rejected}",
    )


def test_criterion_09_decoupling(acceptance):
    runs = []
    for D in ([3.0, 3.0, 3.0], [3.0, 3.4, 3.0]):
        game = decoupled_game(3, 5, D, 0.2)
        state, _ = run(game, StepSchedule(), SOLVER, 5000, 256, SEED)
        runs.append(state)
    a, b = runs
    diff = 0.0
    for i in (0, 2):
        diff = max(diff, float(np.max(np.abs(a.profile.theta[i] - b.profile.theta[i]))))
        diff = max(diff, abs(a.beliefs[i].mean - b.beliefs[i].mean), abs(a.beliefs[i].variance - b.beliefs[i].variance))
    moved = abs(a.beliefs[1].mean - b.beliefs[1].mean)
    acceptance(9, diff <= 1e-12 and moved > 0.01, f"unperturbed holons max change={diff:.1e}, perturbed holon moved {moved:.4f}")


@pytest.mark.parametrize("mode, iters", [("moment", 5000), ("particle", 500)])
def test_criterion_10_determinism(mode, iters, tmp_path, acceptance):
    files = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["run", "--iters", str(iters), "--belief-mode", mode, "--seed", str(SEED), "--out-dir", str(out)]) == 0
        files.append((out / "trace.csv").read_bytes())
    acceptance(10, files[0] == files[1], f"{mode}: trace.csv identical ({len(files[0])} bytes)")
