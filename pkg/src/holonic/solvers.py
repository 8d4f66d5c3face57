"""Best-response and outcome operators, Picard iteration, contraction estimate."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from holonic.errors import ConfigError, NonConvergenceError, NumericError
from holonic.measures import MOMENT, BeliefProfile, profile_distance, pushforward
from holonic.model import ACTION_HIGH, ACTION_LOW, GameSpec, StrategyProfile
from holonic.streams import child

log = logging.getLogger(__name__)

# box for projected gradient on (slope, intercept); actions are clipped anyway
THETA_BOX = 10.0
# interior reference point (all actions 1/2) for the curvature estimate
THETA_REF = np.array([0.0, 0.5])
GRAD_STEP = 1e-4
HESS_STEP = 1e-2
STEP_TOL = 1e-9


@dataclass(frozen=True)
class SolverConfig:
    inner_iterations: int = 50
    inner_step_size: float = 1.0
    gradient_samples: int = 2000
    tolerance: float = 1e-12
    max_picard_iterations: int = 200

    def __post_init__(self):
        for name in ("inner_iterations", "gradient_samples", "max_picard_iterations"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
        if not self.inner_step_size > 0:
            raise ConfigError(f"inner_step_size must be positive, got {self.inner_step_size}")
        if not 0 < self.tolerance < 1:
            raise ConfigError(f"tolerance must lie in (0, 1), got {self.tolerance}")


class BestResponseWarning(UserWarning):
    pass


@dataclass
class NumericResponse:
    slope: float
    intercept: float
    converged: bool
    iterations: int
    cost: float


def _fit_analytic(game: GameSpec, holon: int, external_means) -> tuple[float, float]:
    x0 = float(game.analytic_best_response(holon, 0.0, external_means))
    x1 = float(game.analytic_best_response(holon, 1.0, external_means))
    return x1 - x0, x0


class _SampledObjectives:
    """Sampled ex-ante costs of a set of agents, one row per agent.

    Each agent draws its own batch of (own, peer) types from its own stream;
    the batch is reused for every evaluation (common random numbers), so each
    row is a fixed sample-average function of that agent's (slope, intercept).
    Peers play their current strategies and do not move during the search.
    """

    def __init__(self, game, profile, beliefs, agents, samples, rng):
        n = game.n
        self.game = game
        self.agents = agents
        holons = sorted({i for i, _ in agents})
        self.groups = [(i, np.array([a for a, (h, _) in enumerate(agents) if h == i])) for i in holons]
        self.ext = {i: beliefs.external_means(i) for i in holons}
        xi_own, peer_sum = [], []
        for i, k in agents:
            xi = game.sample_types(child(rng, i, k), (samples, n))
            peers = [p for p in range(n) if p != k]
            th = profile.theta[i, peers]
            xi_own.append(xi[:, k])
            peer_sum.append(np.clip(xi[:, peers] * th[:, 0] + th[:, 1], ACTION_LOW, ACTION_HIGH).sum(axis=1))
        self.xi = np.array(xi_own)
        self.peer_sum = np.array(peer_sum)

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        """Costs for parameters ``theta`` of shape (agents, 2)."""
        n = self.game.n
        x = np.clip(theta[:, :1] * self.xi + theta[:, 1:], ACTION_LOW, ACTION_HIGH)
        X = (x + self.peer_sum) / n
        out = np.empty(len(self.agents))
        for i, rows in self.groups:
            out[rows] = self.game.cost(i, x[rows], X[rows], self.xi[rows], self.ext[i]).mean(axis=1)
        return out


def _numeric_responses(game, profile, beliefs, agents, config, rng) -> list[NumericResponse]:
    f = _SampledObjectives(game, profile, beliefs, agents, config.gradient_samples, rng)
    A = len(agents)
    e = np.eye(2)
    ref = np.tile(THETA_REF, (A, 1))

    h = HESS_STEP
    f0 = f(ref)
    H = np.empty((A, 2, 2))
    for d in range(2):
        H[:, d, d] = (f(ref + h * e[d]) - 2 * f0 + f(ref - h * e[d])) / (h * h)
    cross = f(ref + h * (e[0] + e[1])) - f(ref + h * (e[0] - e[1])) - f(ref + h * (e[1] - e[0])) + f(ref - h * (e[0] + e[1]))
    H[:, 0, 1] = H[:, 1, 0] = cross / (4 * h * h)
    precond = np.tile(np.eye(2), (A, 1, 1))
    for a in range(A):
        if np.all(np.isfinite(H[a])) and np.all(np.linalg.eigvalsh(H[a]) > 0):
            precond[a] = np.linalg.inv(H[a])

    theta = ref.copy()
    best, best_cost = theta.copy(), f0.copy()
    active = np.ones(A, dtype=bool)
    iterations = np.zeros(A, dtype=int)
    for j in range(config.inner_iterations):
        g = np.stack([(f(theta + GRAD_STEP * e[d]) - f(theta - GRAD_STEP * e[d])) / (2 * GRAD_STEP) for d in range(2)], axis=1)
        bad = active & ~np.all(np.isfinite(g), axis=1)
        if bad.any():
            i, k = agents[int(np.argmax(bad))]
            raise NumericError(f"non-finite gradient for agent ({i}, {k})")
        step = config.inner_step_size / (1 + j) * np.einsum("aij,aj->ai", precond, g)
        new = np.clip(theta - step, -THETA_BOX, THETA_BOX)
        moved = np.max(np.abs(new - theta), axis=1)
        theta = np.where(active[:, None], new, theta)
        iterations[active] = j + 1
        c = f(theta)
        better = active & (c < best_cost)
        best[better], best_cost[better] = theta[better], c[better]
        active &= moved >= STEP_TOL
        if not active.any():
            break
    return [
        NumericResponse(float(best[a, 0]), float(best[a, 1]), not active[a], int(iterations[a]), float(best_cost[a]))
        for a in range(A)
    ]


def numeric_best_response(
    game: GameSpec,
    holon: int,
    agent: int,
    profile: StrategyProfile,
    beliefs: BeliefProfile,
    config: SolverConfig,
    rng: np.random.Generator,
) -> NumericResponse:
    """Minimize one agent's sampled ex-ante cost over (slope, intercept).

    Projected gradient descent with central-difference gradients under
    common random numbers. Steps are preconditioned by a finite-difference
    Hessian taken at the interior point ``THETA_REF`` and scaled by
    ``inner_step_size / (1 + j)``; the best iterate is returned.
    """
    return _numeric_responses(game, profile, beliefs, [(holon, agent)], config, rng)[0]


def best_response_operator(
    game: GameSpec,
    profile: StrategyProfile,
    beliefs: BeliefProfile,
    config: SolverConfig,
    rng: np.random.Generator | None = None,
    force_numeric: bool = False,
) -> StrategyProfile:
    """Profile of cost-minimizing strategies against ``profile`` and ``beliefs``.

    With an analytic responder the line through its answers at types 0 and 1
    is returned; otherwise every agent is solved as in
    :func:`numeric_best_response`, all agents batched together, each on its
    own sub-stream ``child(rng, holon, agent)``.
    """
    game.check_profile(profile)
    M, n = game.M, game.n
    theta = np.empty((M, n, 2))
    if game.has_analytic_best_response and not force_numeric:
        for i in range(M):
            theta[i, :] = _fit_analytic(game, i, beliefs.external_means(i))
        return StrategyProfile(theta)
    if rng is None:
        raise ValueError("numeric best responses need an rng stream")
    agents = [(i, k) for i in range(M) for k in range(n)]
    unconverged = []
    for (i, k), r in zip(agents, _numeric_responses(game, profile, beliefs, agents, config, rng)):
        theta[i, k] = (r.slope, r.intercept)
        if not r.converged:
            unconverged.append((i, k))
    if unconverged:
        warnings.warn(
            f"numeric best response did not converge for agents {unconverged}; returning best iterates",
            BestResponseWarning,
            stacklevel=2,
        )
    return StrategyProfile(theta)


def outcome_operator(
    game: GameSpec,
    beliefs: BeliefProfile,
    profile: StrategyProfile,
    n_samples: int,
    rng: np.random.Generator,
) -> BeliefProfile:
    """Per-holon pushforward under ``profile`` with coupling read from ``beliefs``."""
    out = tuple(pushforward(game, i, profile, beliefs, n_samples, child(rng, i)) for i in range(game.M))
    return BeliefProfile(out, beliefs.mode)


@dataclass
class PicardResult:
    profile: StrategyProfile
    beliefs: BeliefProfile
    iterations: int
    residuals: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.profile, self.beliefs, self.iterations))

    @property
    def means(self) -> np.ndarray:
        return self.beliefs.means()


def picard_fixed_point(
    game: GameSpec,
    config: SolverConfig,
    mode: str,
    rng: np.random.Generator,
    n_samples: int = 2000,
    initial: BeliefProfile | None = None,
    force_numeric: bool = False,
) -> PicardResult:
    """Iterate q <- T(q, B(., q)) until successive beliefs are within tolerance.

    The same sub-streams are reused every iteration, so in particle mode the
    map being iterated is a fixed sample-average map. ``iterations`` counts
    the belief updates before the one that confirmed convergence.
    """
    q = initial if initial is not None else BeliefProfile.constant(game.M, 0.0, mode)
    mu = StrategyProfile.constant(game.M, game.n, 0.0, 0.0)
    residuals: list[float] = []
    dist = float("inf")
    for k in range(1, config.max_picard_iterations + 1):
        mu = best_response_operator(game, mu, q, config, child(rng, 0), force_numeric)
        q_new = outcome_operator(game, q, mu, n_samples, child(rng, 1))
        dist = profile_distance(q_new, q)
        residuals.append(dist)
        q = q_new
        log.debug("picard iteration %d: distance %.3e", k, dist)
        if dist < config.tolerance:
            mu = best_response_operator(game, mu, q, config, child(rng, 0), force_numeric)
            return PicardResult(mu, q, k - 1, residuals)
    raise NonConvergenceError(
        f"Picard iteration did not converge in {config.max_picard_iterations} iterations "
        f"(final distance {dist:.3e}); the contraction condition may fail for these parameters",
        distance=dist,
        iterations=config.max_picard_iterations,
    )


def _picard_map(game, q, config, rng, n_samples, force_numeric):
    mu0 = StrategyProfile.constant(game.M, game.n, 0.0, 0.0)
    mu = best_response_operator(game, mu0, q, config, child(rng, 0), force_numeric)
    return outcome_operator(game, q, mu, n_samples, child(rng, 1))


def contraction_ratio(
    game: GameSpec,
    q1: BeliefProfile,
    q2: BeliefProfile,
    config: SolverConfig,
    rng: np.random.Generator,
    n_samples: int = 2000,
    force_numeric: bool = False,
) -> float:
    """W(Phi(q1), Phi(q2)) / W(q1, q2) with Phi(q) = T(q, B(., q)) and common random numbers."""
    d = profile_distance(q1, q2)
    if d == 0:
        raise ValueError("degenerate pair: beliefs coincide")
    a = _picard_map(game, q1, config, rng, n_samples, force_numeric)
    b = _picard_map(game, q2, config, rng, n_samples, force_numeric)
    return profile_distance(a, b) / d


def contraction_estimate(
    game: GameSpec,
    config: SolverConfig,
    trials: int,
    rng: np.random.Generator,
    mode: str = MOMENT,
    box: tuple[float, float] = (0.0, 1.0),
    n_samples: int = 2000,
    force_numeric: bool = False,
) -> float:
    """Largest observed Lipschitz ratio of the Picard map over random belief pairs.

    Beliefs are point masses with means uniform in ``box``. Each trial scores
    the random pair and its sign-vertex companion ``(q1, q1 + |d|_inf sign(d))``;
    under the max-over-holons metric the Lipschitz ratio of a smooth map is
    attained along such directions.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    lo, hi = box
    worst = 0.0
    counted = 0
    while counted < trials:
        u1 = rng.uniform(lo, hi, game.M)
        u2 = rng.uniform(lo, hi, game.M)
        delta = u2 - u1
        r = float(np.max(np.abs(delta)))
        if r == 0.0:
            continue
        q1 = BeliefProfile.from_means(u1, mode)
        stream = child(rng, counted)
        pairs = [(q1, BeliefProfile.from_means(u2, mode)), (q1, BeliefProfile.from_means(u1 + r * np.sign(delta), mode))]
        for a, b in pairs:
            worst = max(worst, contraction_ratio(game, a, b, config, stream, n_samples, force_numeric))
        counted += 1
    return worst
