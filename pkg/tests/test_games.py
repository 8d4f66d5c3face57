import warnings

import numpy as np
import pytest

from holonic.errors import ConfigError, UnsupportedRegimeError
from holonic.games import (
    PublicGoodGame,
    PublicGoodParams,
    analytic_best_response,
    analytic_equilibrium,
    decoupled_game,
    make_game,
    outcome_map,
)
from holonic.measures import BeliefProfile
from holonic.model import StrategyProfile, expected_cost
from holonic.solvers import SolverConfig, best_response_operator, outcome_operator
from holonic.streams import stream

P = PublicGoodParams()


# -- parameters -------------------------------------------------------------


def test_gamma_bound_message():
    with pytest.raises(ConfigError, match=r"gamma=0.5 violates 0 <= gamma < \(1 - kappa\)/\(M - 1\) = 0.4"):
        PublicGoodGame(3, 5, PublicGoodParams(gamma=0.5))


@pytest.mark.parametrize(
    "params",
    [
        PublicGoodParams(D=1.0),
        PublicGoodParams(kappa=0.0),
        PublicGoodParams(kappa=1.0),
        PublicGoodParams(gamma=-0.01),
        PublicGoodParams(gamma=0.4),
        PublicGoodParams(rho=-1.0),
        PublicGoodParams(D=float("nan")),
    ],
)
def test_invalid_params_rejected(params):
    with pytest.raises(ConfigError):
        PublicGoodGame(3, 5, params)


def test_game_shape_rejected():
    with pytest.raises((ConfigError, ValueError)):
        PublicGoodGame(1, 5, P)
    with pytest.raises((ConfigError, ValueError)):
        PublicGoodGame(3, 0, P)
    with pytest.raises(ConfigError):
        make_game("voting", 3, 5, 3.0, 0.2, 0.1, 0.0)


# -- outcome map --------------------------------------------------------------


def test_outcome_map_examples():
    acts = np.full(5, 0.5)
    assert outcome_map(PublicGoodParams(gamma=0.0), 0, acts, [0.9, -3.0]) == pytest.approx(0.3, abs=1e-15)
    assert outcome_map(P, 0, acts, [0.125, 0.125]) == pytest.approx(0.125, abs=1e-15)
    # symmetric fixed-point formula (X - kappa - gamma (M-1)) / (1 - gamma (M-1))
    assert (0.5 - 0.2 - 0.2) / 0.8 == pytest.approx(0.125, abs=1e-15)
    assert outcome_map(P, 2, np.zeros(5), [1.0, 1.0]) == pytest.approx(-0.2, abs=1e-15)


# -- best responses -----------------------------------------------------------


def test_best_response_examples():
    assert analytic_best_response(P, 5, 0.5, [0.1, 0.2]) == pytest.approx(0.5)
    assert analytic_best_response(PublicGoodParams(rho=0.5), 5, 0.0, [1 / 3, 1 / 3]) == pytest.approx(0.8)
    # D = 0 lies outside the validated game range, the formula still clips
    raw = PublicGoodParams(D=0.0)
    assert analytic_best_response(raw, 5, np.linspace(0, 1, 5), [0.0, 0.0]).tolist() == [0.0] * 5


def test_variant_best_response_matches_grid_search():
    game = PublicGoodGame(3, 5, PublicGoodParams(rho=0.5))
    profile = StrategyProfile.constant(3, 5, -4 / 15, 0.8)
    beliefs = BeliefProfile.constant(3, 1 / 3, "moment")
    grid = np.round(np.arange(0, 1.0005, 1e-3), 12)
    costs = [expected_cost(game, 0, 0, x, 0.0, profile, beliefs, 500, stream(0, "grid")) for x in grid]
    assert grid[int(np.argmin(costs))] == pytest.approx(0.8, abs=1e-3)


def test_best_response_minimizes_cost_random_draws():
    rng = np.random.default_rng(12345)
    grid = np.arange(0, 1.0005, 1e-3)
    for trial in range(100):
        params = PublicGoodParams(D=rng.uniform(1.01, 6), kappa=0.2, gamma=0.1, rho=rng.uniform(0, 1))
        game = PublicGoodGame(3, 5, params)
        ext = rng.uniform(0, 1, 2)
        beliefs = BeliefProfile.from_means(np.insert(ext, 1, rng.uniform()), "moment")
        xi = rng.uniform()
        profile = StrategyProfile.constant(3, 5, rng.uniform(-1, 1), rng.uniform(0, 1))
        costs = np.array([expected_cost(game, 1, 0, x, xi, profile, beliefs, 64, stream(trial, "grid")) for x in grid])
        br = analytic_best_response(params, 5, xi, beliefs.external_means(1))
        assert abs(grid[int(np.argmin(costs))] - br) <= 1e-3 + 1e-12


# -- closed-form equilibria ---------------------------------------------------


def test_analytic_equilibrium_examples():
    s, c, m = analytic_equilibrium(P, 3, 5, 0.5)
    assert (s, c, m) == pytest.approx((-0.2, 0.6, 0.125), abs=1e-15)
    assert analytic_equilibrium(PublicGoodParams(gamma=0.0), 3, 5, 0.5)[2] == pytest.approx(0.3, abs=1e-15)
    s, c, m = analytic_equilibrium(PublicGoodParams(rho=0.5), 3, 5, 0.5)
    assert (s, c, m) == pytest.approx((-4 / 15, 0.8, 1 / 3), abs=1e-14)
    # the two affine equations of the variant
    EX = 0.75 - 0.25 * m
    assert m == pytest.approx(EX - 0.4 + 0.2 * m, abs=1e-14)


def test_analytic_equilibrium_non_interior():
    with pytest.raises(UnsupportedRegimeError):
        analytic_equilibrium(PublicGoodParams(D=5.5), 3, 5, 0.5)
    with pytest.raises(UnsupportedRegimeError):
        PublicGoodGame(3, 2, P).equilibrium()


@pytest.mark.parametrize("rho", [0.0, 0.5])
def test_game_equilibrium_matches_scalar_formula(rho):
    game = PublicGoodGame(3, 5, PublicGoodParams(rho=rho))
    eq = game.equilibrium()
    s, c, m = analytic_equilibrium(game.params[0], 3, 5, 0.5)
    assert np.allclose(eq.means, m, atol=1e-14)
    assert np.allclose(eq.slopes, s, atol=1e-14) and np.allclose(eq.intercepts, c, atol=1e-14)
    assert np.allclose(eq.variances, s * s / 12 / 5, atol=1e-16)
    # symmetric across holons and agents
    th = eq.profile(5).theta.reshape(-1, 2)
    assert np.ptp(th, axis=0).max() < 1e-14


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.2])
def test_equilibrium_is_fixed_point_of_B_and_T(rho):
    game = PublicGoodGame(3, 5, PublicGoodParams(rho=rho))
    eq = game.equilibrium()
    profile = eq.profile(5)
    beliefs = BeliefProfile.from_means(eq.means, "moment")
    out = outcome_operator(game, beliefs, profile, 1, stream(0, "T"))
    assert np.max(np.abs(out.means() - eq.means)) < 1e-10
    br = best_response_operator(game, profile, beliefs, SolverConfig())
    assert br.distance(profile) < 1e-10


def test_heterogeneous_equilibrium_is_fixed_point():
    params = [PublicGoodParams(D=d, gamma=0.08, rho=r) for d, r in [(2.4, 0.0), (2.7, 0.3), (2.9, 0.6)]]
    game = PublicGoodGame(3, 5, params)
    eq = game.equilibrium()
    profile = eq.profile(5)
    beliefs = BeliefProfile.from_means(eq.means, "moment")
    assert np.max(np.abs(outcome_operator(game, beliefs, profile, 1, stream(0, "T")).means() - eq.means)) < 1e-12
    assert best_response_operator(game, profile, beliefs, SolverConfig()).distance(profile) < 1e-12


# -- decoupled game -----------------------------------------------------------


def test_decoupled_closed_form():
    game = decoupled_game(3, 5, [2.5, 3.0, 3.5], 0.2)
    eq = game.equilibrium()
    assert np.allclose(eq.means, (np.array([2.5, 3.0, 3.5]) - 0.5) / 5 - 0.2, atol=1e-15)
    assert game.kind == "decoupled"


def test_decoupled_perturbation_is_local():
    a = decoupled_game(3, 5, [3.0, 3.0, 3.0]).equilibrium()
    b = decoupled_game(3, 5, [3.0, 3.4, 3.0]).equilibrium()
    for i in (0, 2):
        assert a.means[i] == b.means[i] and a.slopes[i] == b.slopes[i] and a.intercepts[i] == b.intercepts[i]
    assert a.means[1] != b.means[1]


# -- realized coupling ----------------------------------------------------------


def test_realized_coupling_moments_match_sampling():
    game = PublicGoodGame(3, 5, P, coupling="realized")
    profile = StrategyProfile.constant(3, 5, -0.2, 0.6)
    beliefs = BeliefProfile.constant(3, 0.0, "moment")
    mean, var = game.outcome_moments(0, profile, beliefs)
    # realized equilibrium means coincide with the belief-mediated ones
    assert mean == pytest.approx(0.125, abs=1e-14)
    samples = game.sample_outcomes(0, profile, BeliefProfile.constant(3, 0.0, "particle"), 4 * 10**5, stream(0, "s"))
    assert samples.mean() == pytest.approx(mean, abs=4 * np.sqrt(var / samples.size))
    assert samples.var() == pytest.approx(var, rel=0.02)
    # realized outcomes solve the simultaneous system exactly
    X = np.array([[0.5, 0.45, 0.55]])
    om = game.realized_outcomes(X)[0]
    for i in range(3):
        assert om[i] == pytest.approx(X[0, i] - 0.2 - 0.1 * sum(1 - om[j] for j in range(3) if j != i), abs=1e-14)


def test_outcome_range_warning():
    assert PublicGoodGame(3, 5, P).outcome_range_warning() is None
    low = PublicGoodGame(3, 5, PublicGoodParams(kappa=0.45))
    assert "leaves [0, 1]" in low.outcome_range_warning()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        low.warn_outcome_range()
    assert caught
