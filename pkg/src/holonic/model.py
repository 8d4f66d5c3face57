"""Abstract holonic game: types, linear-clipped strategies, expected cost, risk.

Concrete games subclass :class:`GameSpec` and provide the cost and outcome
hooks; everything here is written against those hooks only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from holonic.errors import ConfigError

if TYPE_CHECKING:
    from holonic.measures import BeliefProfile

ACTION_LOW, ACTION_HIGH = 0.0, 1.0
COUPLINGS = ("belief", "realized")


# --------------------------------------------------------------------------
# type distributions on [0, 1]


@dataclass(frozen=True)
class UniformTypes:
    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.random(shape)

    @property
    def mean(self) -> float:
        return 0.5

    @property
    def variance(self) -> float:
        return 1.0 / 12.0

    def clipped_moments(self, slope: float, intercept: float):
        """(E[x], E[x^2]) for x = clip(slope * xi + intercept, 0, 1), exactly."""
        if slope == 0.0:
            x = min(ACTION_HIGH, max(ACTION_LOW, intercept))
            return x, x * x
        lo, hi = sorted((intercept, slope + intercept))
        width = hi - lo
        if width == 0.0:
            x = min(ACTION_HIGH, max(ACTION_LOW, intercept))
            return x, x * x
        # fractions of the type range mapped above 1 and inside [0, 1]; factored
        # differences keep tiny slopes accurate
        above = max(0.0, hi - max(lo, 1.0)) / width
        l, u = max(lo, 0.0), min(hi, 1.0)
        inside = max(0.0, u - l) / width
        m1 = above + inside * (u + l) / 2.0
        m2 = above + inside * (u * u + u * l + l * l) / 3.0
        return m1, m2

    def describe(self) -> str:
        return "uniform"


@dataclass(frozen=True)
class BetaTypes:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError(f"beta type distribution needs a, b > 0, got {self.a}, {self.b}")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.beta(self.a, self.b, shape)

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    @property
    def variance(self) -> float:
        s = self.a + self.b
        return self.a * self.b / (s * s * (s + 1))

    def clipped_moments(self, slope: float, intercept: float):
        # exact only while no clipping is active on [0, 1]
        ends = (intercept, slope + intercept)
        if min(ends) < ACTION_LOW or max(ends) > ACTION_HIGH:
            return None
        m = slope * self.mean + intercept
        return m, slope * slope * self.variance + m * m

    def describe(self) -> str:
        return f"beta:{self.a!r},{self.b!r}"


def parse_types(text: str):
    text = text.strip().lower()
    if text == "uniform":
        return UniformTypes()
    if text.startswith("beta:"):
        try:
            a, b = (float(v) for v in text[5:].split(","))
        except ValueError:
            raise ConfigError(f"cannot parse type distribution {text!r}") from None
        return BetaTypes(a, b)
    raise ConfigError(f"unknown type distribution {text!r} (expected uniform or beta:a,b)")


# --------------------------------------------------------------------------
# strategies


@dataclass(frozen=True)
class LinearClippedStrategy:
    slope: float
    intercept: float

    def __call__(self, xi):
        return act(self, xi)


def act(strategy: LinearClippedStrategy, xi):
    """clip(slope * xi + intercept, 0, 1); works elementwise on arrays."""
    y = np.clip(strategy.slope * np.asarray(xi, dtype=float) + strategy.intercept, ACTION_LOW, ACTION_HIGH)
    return float(y) if y.ndim == 0 else y


class StrategyProfile:
    """Parameters for every agent, shape ``(M, n, 2)`` holding ``(slope, intercept)``."""

    __slots__ = ("theta",)

    def __init__(self, theta):
        theta = np.array(theta, dtype=float)
        if theta.ndim != 3 or theta.shape[2] != 2:
            raise ValueError(f"strategy parameters must have shape (M, n, 2), got {theta.shape}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("strategy parameters must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def __setattr__(self, name, value):
        raise AttributeError("StrategyProfile is immutable")

    @classmethod
    def constant(cls, M: int, n: int, slope: float, intercept: float) -> "StrategyProfile":
        theta = np.empty((M, n, 2))
        theta[..., 0] = slope
        theta[..., 1] = intercept
        return cls(theta)

    @property
    def shape(self) -> tuple[int, int]:
        return self.theta.shape[:2]

    @property
    def slopes(self) -> np.ndarray:
        return self.theta[..., 0]

    @property
    def intercepts(self) -> np.ndarray:
        return self.theta[..., 1]

    def strategy(self, holon: int, agent: int) -> LinearClippedStrategy:
        s, c = self.theta[holon, agent]
        return LinearClippedStrategy(float(s), float(c))

    def actions(self, holon: int, xi: np.ndarray) -> np.ndarray:
        """Actions of every agent of ``holon`` for types ``xi`` of shape (..., n)."""
        th = self.theta[holon]
        return np.clip(xi * th[:, 0] + th[:, 1], ACTION_LOW, ACTION_HIGH)

    def mix(self, other: "StrategyProfile", alpha: float) -> "StrategyProfile":
        """(1 - alpha) self + alpha other, in parameter space."""
        if alpha == 0.0:
            return self
        return StrategyProfile((1 - alpha) * self.theta + alpha * other.theta)

    def with_agent(self, holon: int, agent: int, slope: float, intercept: float) -> "StrategyProfile":
        theta = self.theta.copy()
        theta[holon, agent] = (slope, intercept)
        return StrategyProfile(theta)

    def distance(self, other: "StrategyProfile") -> float:
        """Sup-norm over every parameter component."""
        return float(np.max(np.abs(self.theta - other.theta)))

    def __eq__(self, other):
        return isinstance(other, StrategyProfile) and np.array_equal(self.theta, other.theta)

    def __repr__(self):
        M, n = self.shape
        return f"StrategyProfile(M={M}, n={n}, slope_avg={self.slopes.mean():.6g}, intercept_avg={self.intercepts.mean():.6g})"


# --------------------------------------------------------------------------
# game base


class GameSpec:
    """Holons, agents, types and the hooks a concrete game fills in.

    Subclasses implement ``cost``, ``outcome`` and, optionally,
    ``analytic_best_response``, ``outcome_moments`` and ``realized_outcomes``.
    """

    kind = "abstract"

    def __init__(self, M: int, n: int, types=None, coupling: str = "belief"):
        if M < 2:
            raise ConfigError(f"need at least 2 holons, got M={M}")
        if n < 1:
            raise ConfigError(f"need at least 1 agent per holon, got n={n}")
        if coupling not in COUPLINGS:
            raise ConfigError(f"coupling must be one of {COUPLINGS}, got {coupling!r}")
        self.M = int(M)
        self.n = int(n)
        self.types = types if types is not None else UniformTypes()
        self.coupling = coupling
        self.action_bounds = (ACTION_LOW, ACTION_HIGH)

    # hooks -------------------------------------------------------------

    def cost(self, holon, x_own, mean_action, xi_own, external_means):
        raise NotImplementedError

    def outcome(self, holon, mean_action, external_means):
        raise NotImplementedError

    has_analytic_best_response = False

    def analytic_best_response(self, holon, xi, external_means):
        raise NotImplementedError

    def outcome_moments(self, holon, profile, beliefs):
        return None

    def realized_outcomes(self, mean_actions: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} does not support realized coupling")

    # shared sampling ---------------------------------------------------

    def sample_types(self, rng: np.random.Generator, shape) -> np.ndarray:
        return self.types.sample(rng, shape)

    def sample_outcomes(self, holon, profile: StrategyProfile, beliefs: "BeliefProfile", n_samples, rng):
        if self.coupling == "realized":
            xi = self.sample_types(rng, (n_samples, self.M, self.n))
            X = np.stack([profile.actions(j, xi[:, j, :]).mean(axis=1) for j in range(self.M)], axis=1)
            return self.realized_outcomes(X)[:, holon]
        xi = self.sample_types(rng, (n_samples, self.n))
        X = profile.actions(holon, xi).mean(axis=1)
        return self.outcome(holon, X, beliefs.external_means(holon))

    def check_profile(self, profile: StrategyProfile):
        if profile.shape != (self.M, self.n):
            raise ValueError(f"profile shape {profile.shape} does not match game ({self.M}, {self.n})")


def expected_cost(
    game: GameSpec,
    holon: int,
    agent: int,
    x: float,
    xi: float,
    profile: StrategyProfile,
    beliefs: "BeliefProfile",
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Monte Carlo estimate of agent ``agent``'s interim cost of action ``x``.

    Peer types are sampled from the (independent) type distribution; external
    outcomes enter through the belief means, so their expectation is exact.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    ext = beliefs.external_means(holon)
    n = game.n
    if n == 1:
        return float(game.cost(holon, x, x, xi, ext))
    peers = [k for k in range(n) if k != agent]
    xi_peers = game.sample_types(rng, (n_samples, n - 1))
    th = profile.theta[holon, peers]
    x_peers = np.clip(xi_peers * th[:, 0] + th[:, 1], ACTION_LOW, ACTION_HIGH)
    X = (x + x_peers.sum(axis=1)) / n
    return float(np.mean(game.cost(holon, x, X, xi, ext)))


def holonic_risk(
    game: GameSpec,
    holon: int,
    agent: int,
    profile: StrategyProfile,
    beliefs: "BeliefProfile",
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Ex-ante expected cost of one agent, own type integrated out too."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    xi = game.sample_types(rng, (n_samples, game.n))
    x = profile.actions(holon, xi)
    X = x.mean(axis=1)
    costs = game.cost(holon, x[:, agent], X, xi[:, agent], beliefs.external_means(holon))
    return float(np.mean(costs))


def average_risk(game: GameSpec, profile, beliefs, n_samples: int, rng) -> float:
    """Holonic risk averaged over every agent of every holon (one shared draw per holon)."""
    total = 0.0
    for i in range(game.M):
        xi = game.sample_types(rng, (n_samples, game.n))
        x = profile.actions(i, xi)
        X = x.mean(axis=1, keepdims=True)
        total += float(np.mean(game.cost(i, x, X, xi, beliefs.external_means(i))))
    return total / game.M


def clipped_moments(game: GameSpec, strategy: LinearClippedStrategy):
    """Exact (E[x], Var[x]) of one agent's action, or None if the type law lacks a closed form."""
    out = game.types.clipped_moments(strategy.slope, strategy.intercept)
    if out is None:
        return None
    m1, m2 = out
    return m1, max(0.0, m2 - m1 * m1)

