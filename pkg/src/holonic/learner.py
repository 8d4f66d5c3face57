"""Two-timescale holonic learning.

Strategies move fast toward the best response to current beliefs; beliefs
move slowly toward the outcome distribution the strategies generate:

    mu_{t+1} = (1 - alpha_t) mu_t + alpha_t B(mu_t, q_t)
    q_{t+1}  = (1 - beta_t) q_t + beta_t T(q_t, mu_{t+1})

with ``beta_t / alpha_t -> 0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from holonic.errors import ConfigError, HolonicError
from holonic.games import Equilibrium
from holonic.measures import (
    MOMENT,
    PARTICLE,
    BeliefProfile,
    MomentBelief,
    mixture,
    profile_distance,
    pushforward,
)
from holonic.model import GameSpec, StrategyProfile, average_risk
from holonic.solvers import SolverConfig, best_response_operator, outcome_operator
from holonic.streams import stream

T_ARGUMENTS = ("next", "current")


@dataclass(frozen=True)
class StepSchedule:
    """alpha_t = a0 / (t + offset)**exponent_alpha, likewise beta_t."""

    a0: float = 0.5
    b0: float = 0.5
    exponent_alpha: float = 0.6
    exponent_beta: float = 0.9
    offset: int = 1

    def __post_init__(self):
        pa, pb = self.exponent_alpha, self.exponent_beta
        if not (0.5 < pa <= 1 and 0.5 < pb <= 1):
            raise ConfigError(
                f"exponents must lie in (0.5, 1] (got alpha {pa}, beta {pb}): "
                "sum of steps must diverge and sum of squares converge"
            )
        if not pb > pa:
            raise ConfigError(
                f"exponent_beta ({pb}) must exceed exponent_alpha ({pa}) so beliefs are the slow timescale"
            )
        if int(self.offset) != self.offset or self.offset < 1:
            raise ConfigError(f"offset must be a positive integer, got {self.offset}")
        if not 0 < self.a0 <= self.offset**pa:
            raise ConfigError(f"a0 must lie in (0, offset**exponent_alpha] = (0, {self.offset**pa:.6g}]")
        if not 0 < self.b0 <= self.offset**pb:
            raise ConfigError(f"b0 must lie in (0, offset**exponent_beta] = (0, {self.offset**pb:.6g}]")

    def alpha(self, t):
        return self.a0 / (np.asarray(t, dtype=float) + self.offset) ** self.exponent_alpha

    def beta(self, t):
        return self.b0 / (np.asarray(t, dtype=float) + self.offset) ** self.exponent_beta


def schedule_values(s: StepSchedule, t: int) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be >= 0")
    return float(s.alpha(t)), float(s.beta(t))


def _dyadic_block_sums(terms: np.ndarray, first: int) -> np.ndarray:
    k_max = int(math.log2(terms.size))
    return np.array([terms[2**k - 1 : 2 ** (k + 1) - 1].sum() for k in range(first, k_max)])


def schedule_checks(s: StepSchedule, horizon: int = 10**6, tail_tol: float = 1e-6) -> dict:
    """Numerical witnesses for the step-size conditions of two-timescale convergence.

    * divergence of sum alpha_t and sum beta_t: dyadic block sums
      sum_{2^k <= t+1 < 2^{k+1}} do not shrink geometrically (a convergent
      p-series has block ratio 2^(1-p) < 1);
    * convergence of sum (alpha_t^2 + beta_t^2): blocks shrink geometrically,
      and the integral-test tail bound falls below ``tail_tol`` at a finite
      index ``square_tail_index``;
    * beta_t / alpha_t decreasing to 0, reported at the horizon.
    """
    t = np.arange(horizon, dtype=float)
    a, b = s.alpha(t), s.beta(t)
    out: dict = {}
    for name, seq in (("alpha", a), ("beta", b)):
        blocks = _dyadic_block_sums(seq, 10)
        out[f"{name}_partial_sum"] = float(seq.sum())
        # p-series blocks have ratio -> 2^(1-p): >= 1 when divergent, < 1 otherwise
        out[f"sum_{name}_diverges"] = bool(np.min(blocks[1:] / blocks[:-1]) >= 1 - 1e-3)
    sq = a * a + b * b
    blocks = _dyadic_block_sums(sq, 10)
    ratios = blocks[1:] / blocks[:-1]
    out["square_partial_sum"] = float(sq.sum())
    out["square_block_ratio"] = float(ratios.max())
    p = 2 * min(s.exponent_alpha, s.exponent_beta)
    if p > 1:
        # sum_{t >= N} c (t + offset)^{-p} <= c (N + offset - 1)^{1-p} / (p - 1)
        c = s.a0**2 + s.b0**2
        n_tail = (tail_tol * (p - 1) / c) ** (1 / (1 - p)) - s.offset + 1
        out["square_tail_index"] = float(max(n_tail, 0.0))
    else:
        out["square_tail_index"] = math.inf
    out["sum_squares_converges"] = bool(ratios.max() < 1 - 1e-3 and math.isfinite(out["square_tail_index"]))
    ratio = b / a
    out["ratio_at_horizon"] = float(ratio[-1])
    out["ratio_vanishes"] = bool(np.all(np.diff(ratio) <= 0) and ratio[-1] < ratio[0])
    out["all_pass"] = all(out[k] for k in ("sum_alpha_diverges", "sum_beta_diverges", "sum_squares_converges", "ratio_vanishes"))
    return out


@dataclass(frozen=True)
class LearnerState:
    t: int
    profile: StrategyProfile
    beliefs: BeliefProfile
    rng_root: int

    @classmethod
    def initial(cls, game: GameSpec, mode: str, seed: int) -> "LearnerState":
        """Zero contribution and point-mass-at-zero beliefs."""
        return cls(
            0,
            StrategyProfile.constant(game.M, game.n, 0.0, 0.0),
            BeliefProfile.constant(game.M, 0.0, mode),
            seed,
        )


@dataclass(frozen=True)
class LearnerOptions:
    particle_cap: int = 512
    t_argument: str = "next"
    force_numeric: bool = False
    risk_every: int = 100
    risk_samples: int = 10_000

    def __post_init__(self):
        if self.t_argument not in T_ARGUMENTS:
            raise ConfigError(f"t_argument must be one of {T_ARGUMENTS}, got {self.t_argument!r}")
        if self.particle_cap < 1:
            raise ConfigError("particle_cap must be >= 1")
        if self.risk_every < 1 or self.risk_samples < 1:
            raise ConfigError("risk_every and risk_samples must be >= 1")


class LearnerError(HolonicError):
    def __init__(self, t: int, cause: Exception):
        super().__init__(f"iteration {t}: {cause}")
        self.t = t
        self.cause = cause


def step(
    game: GameSpec,
    state: LearnerState,
    schedule: StepSchedule,
    solver_config: SolverConfig,
    n_samples: int,
    options: LearnerOptions = LearnerOptions(),
    alpha: float | None = None,
    beta: float | None = None,
) -> LearnerState:
    """One fast strategy update followed by one slow belief update.

    ``alpha``/``beta`` override the schedule for this step.
    """
    t, seed = state.t, state.rng_root
    a_t, b_t = schedule_values(schedule, t)
    a_t = a_t if alpha is None else alpha
    b_t = b_t if beta is None else beta
    br = best_response_operator(
        game, state.profile, state.beliefs, solver_config, stream(seed, "best_response", t), options.force_numeric
    )
    profile = state.profile.mix(br, a_t)
    generator = profile if options.t_argument == "next" else state.profile
    target = outcome_operator(game, state.beliefs, generator, n_samples, stream(seed, "outcome", t))
    # one compression stream per holon keeps holons' randomness independent
    beliefs = BeliefProfile(
        tuple(
            mixture(q, tq, b_t, cap=options.particle_cap, rng=stream(seed, "compress", t, i))
            for i, (q, tq) in enumerate(zip(state.beliefs.beliefs, target.beliefs))
        ),
        state.beliefs.mode,
    )
    return LearnerState(t + 1, profile, beliefs, seed)


def tracking_error(
    state_before: LearnerState,
    state_after: LearnerState,
    game: GameSpec,
    solver_config: SolverConfig,
    force_numeric: bool = False,
) -> float:
    """Sup-norm distance from mu_{t+1} to the best response to the frozen beliefs q_t.

    Uses the same random stream as the step's own best response, so the
    value measures lag of the fast variable rather than sampling noise.
    """
    target = best_response_operator(
        game,
        state_after.profile,
        state_before.beliefs,
        solver_config,
        stream(state_before.rng_root, "best_response", state_before.t),
        force_numeric,
    )
    return state_after.profile.distance(target)


def reference_beliefs(game: GameSpec, eq: Equilibrium, mode: str, seed: int, n_samples: int = 4096) -> BeliefProfile:
    """Equilibrium beliefs in the requested representation."""
    if mode == MOMENT:
        return BeliefProfile(tuple(MomentBelief(m, v) for m, v in zip(eq.means, eq.variances)), MOMENT)
    at_eq = BeliefProfile.from_means(eq.means, PARTICLE)
    profile = eq.profile(game.n)
    rng = stream(seed, "reference")
    return BeliefProfile(
        tuple(pushforward(game, i, profile, at_eq, n_samples, rng) for i in range(game.M)), PARTICLE
    )


@dataclass
class Trace:
    M: int
    rows: list = field(default_factory=list)

    @property
    def columns(self) -> list[str]:
        return (
            ["t", "alpha", "beta"]
            + [f"belief_mean_{i}" for i in range(self.M)]
            + ["theta0_avg", "theta1_avg", "d_t", "eps_t", "risk"]
        )

    def append(self, t, alpha, beta, means, theta0, theta1, d, eps, risk):
        self.rows.append((int(t), float(alpha), float(beta), *map(float, means), float(theta0), float(theta1), d, eps, risk))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([np.nan if r[j] is None else r[j] for r in self.rows], dtype=float)

    def belief_means(self) -> np.ndarray:
        return np.stack([self.column(f"belief_mean_{i}") for i in range(self.M)], axis=1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow(["" if v is None else repr(v) for v in r])


def run(
    game: GameSpec,
    schedule: StepSchedule,
    solver_config: SolverConfig,
    iterations: int,
    n_samples: int,
    seed: int,
    reference: Equilibrium | None = None,
    mode: str = MOMENT,
    options: LearnerOptions = LearnerOptions(),
    initial: LearnerState | None = None,
) -> tuple[LearnerState, Trace]:
    """Run ``iterations`` steps from the cold start and record one trace row per step."""
    if iterations < 1:
        raise ConfigError("iterations must be >= 1")
    if n_samples < 1:
        raise ConfigError("n_samples must be >= 1")
    state = initial if initial is not None else LearnerState.initial(game, mode, seed)
    ref_q = reference_beliefs(game, reference, state.beliefs.mode, seed) if reference is not None else None
    trace = Trace(game.M)
    for _ in range(iterations):
        t = state.t
        try:
            new = step(game, state, schedule, solver_config, n_samples, options)
            eps = tracking_error(state, new, game, solver_config, options.force_numeric)
            risk = None
            if t % options.risk_every == 0:
                risk = average_risk(game, new.profile, new.beliefs, options.risk_samples, stream(seed, "risk", t))
        except (HolonicError, ArithmeticError) as exc:
            raise LearnerError(t, exc) from exc
        d = profile_distance(new.beliefs, ref_q) if ref_q is not None else None
        a_t, b_t = schedule_values(schedule, t)
        trace.append(
            t, a_t, b_t, new.beliefs.means(), new.profile.intercepts.mean(), new.profile.slopes.mean(), d, eps, risk
        )
        state = new
    return state, trace


def with_seed(state: LearnerState, seed: int) -> LearnerState:
    return replace(state, rng_root=seed)
