"""Outcome distributions on the real line and the operations the solvers need.

Two belief representations are supported:

* ``ParticleMeasure`` -- weighted atoms, the general path.
* ``MomentBelief`` -- mean and variance only. Exact for the shipped games,
  whose costs read external outcomes through their means.

A ``BeliefProfile`` holds one belief per holon, all in the same mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence, Union

import numpy as np

from holonic.errors import InvalidMeasureError, NumericError

if TYPE_CHECKING:
    from holonic.model import GameSpec, StrategyProfile

PARTICLE = "particle"
MOMENT = "moment"
MODES = (PARTICLE, MOMENT)

WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ParticleMeasure:
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if values.size == 0:
            raise InvalidMeasureError("particle measure has empty support")
        if values.size != weights.size:
            raise InvalidMeasureError(
                f"values ({values.size}) and weights ({weights.size}) differ in length"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidMeasureError("particle values must be finite")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise InvalidMeasureError("particle weights must be finite and nonnegative")
        total = weights.sum()
        if abs(total - 1.0) > WEIGHT_TOL:
            raise InvalidMeasureError(f"weights sum to {total!r}, expected 1")
        values.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point(cls, value: float) -> "ParticleMeasure":
        return cls(np.array([float(value)]), np.array([1.0]))

    @classmethod
    def uniform(cls, values: Sequence[float]) -> "ParticleMeasure":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            raise InvalidMeasureError("particle measure has empty support")
        return cls(values, np.full(values.size, 1.0 / values.size))

    @classmethod
    def normalized(cls, values, weights) -> "ParticleMeasure":
        """Build from unnormalized weights, dropping zero-weight atoms."""
        values = np.asarray(values, dtype=float).ravel()
        weights = np.asarray(weights, dtype=float).ravel()
        keep = weights > 0
        values, weights = values[keep], weights[keep]
        if values.size == 0:
            raise InvalidMeasureError("all weights are zero")
        return cls(values, weights / weights.sum())

    def __len__(self) -> int:
        return self.values.size

    @property
    def mean(self) -> float:
        return float(np.dot(self.weights, self.values))

    @property
    def variance(self) -> float:
        m = self.mean
        return float(np.dot(self.weights, (self.values - m) ** 2))

    def shifted(self, c: float) -> "ParticleMeasure":
        return ParticleMeasure(self.values + c, self.weights)

    def summary(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "particle_count": len(self)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("value,weight\n")
            for v, w in zip(self.values, self.weights):
                fh.write(f"{float(v)!r},{float(w)!r}\n")

    @classmethod
    def from_csv(cls, path) -> "ParticleMeasure":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class MomentBelief:
    mean: float
    variance: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.variance)):
            raise InvalidMeasureError("moment belief must be finite")
        if self.variance < 0:
            # rounding in the mixture formula can leave -1e-17
            if self.variance > -1e-12:
                object.__setattr__(self, "variance", 0.0)
            else:
                raise InvalidMeasureError(f"negative variance {self.variance}")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "variance", float(self.variance))

    def summary(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "particle_count": 0}


Belief = Union[ParticleMeasure, MomentBelief]


def mode_of(belief: Belief) -> str:
    if isinstance(belief, ParticleMeasure):
        return PARTICLE
    if isinstance(belief, MomentBelief):
        return MOMENT
    raise TypeError(f"not a belief: {type(belief).__name__}")


@dataclass(frozen=True)
class BeliefProfile:
    beliefs: tuple
    mode: str

    def __post_init__(self):
        beliefs = tuple(self.beliefs)
        if self.mode not in MODES:
            raise ValueError(f"unknown belief mode {self.mode!r}")
        if not beliefs:
            raise ValueError("belief profile is empty")
        for b in beliefs:
            if mode_of(b) != self.mode:
                raise ValueError("belief profile mixes particle and moment beliefs")
        object.__setattr__(self, "beliefs", beliefs)

    @classmethod
    def constant(cls, M: int, value: float, mode: str) -> "BeliefProfile":
        """Point mass at ``value`` for every holon."""
        if mode == MOMENT:
            return cls(tuple(MomentBelief(value, 0.0) for _ in range(M)), mode)
        return cls(tuple(ParticleMeasure.point(value) for _ in range(M)), mode)

    @classmethod
    def from_means(cls, means, mode: str) -> "BeliefProfile":
        if mode == MOMENT:
            return cls(tuple(MomentBelief(float(m), 0.0) for m in means), mode)
        return cls(tuple(ParticleMeasure.point(float(m)) for m in means), mode)

    def __len__(self) -> int:
        return len(self.beliefs)

    def __getitem__(self, i: int) -> Belief:
        return self.beliefs[i]

    def means(self) -> np.ndarray:
        return np.array([mean(b) for b in self.beliefs])

    def external_means(self, holon: int) -> np.ndarray:
        m = self.means()
        return np.delete(m, holon)

    def replace(self, holon: int, belief: Belief) -> "BeliefProfile":
        beliefs = list(self.beliefs)
        beliefs[holon] = belief
        return BeliefProfile(tuple(beliefs), self.mode)


def mean(a: Belief) -> float:
    return a.mean


def wasserstein1(a: ParticleMeasure, b: ParticleMeasure) -> float:
    """Exact W1 on the line: integral over u of |Qa(u) - Qb(u)|.

    The quantile functions are step functions; merging the two sets of
    cumulative-weight breakpoints gives intervals on which both are constant.
    """
    if not isinstance(a, ParticleMeasure) or not isinstance(b, ParticleMeasure):
        raise InvalidMeasureError("wasserstein1 expects particle measures")
    ia, ib = np.argsort(a.values, kind="stable"), np.argsort(b.values, kind="stable")
    va, wa = a.values[ia], a.weights[ia]
    vb, wb = b.values[ib], b.weights[ib]
    ca, cb = np.cumsum(wa), np.cumsum(wb)
    ca[-1] = cb[-1] = 1.0
    levels = np.union1d(ca, cb)
    lower = np.concatenate(([0.0], levels[:-1]))
    widths = levels - lower
    keep = widths > 0
    levels, widths = levels[keep], widths[keep]
    # quantile on (lower, level]: first atom whose cumulative weight reaches level
    qa = va[np.minimum(np.searchsorted(ca, levels, side="left"), va.size - 1)]
    qb = vb[np.minimum(np.searchsorted(cb, levels, side="left"), vb.size - 1)]
    return float(np.dot(widths, np.abs(qa - qb)))


def belief_distance(a: Belief, b: Belief) -> float:
    """W1 for particles; |mean difference| for moment beliefs (a pseudo-metric)."""
    if isinstance(a, ParticleMeasure) and isinstance(b, ParticleMeasure):
        return wasserstein1(a, b)
    if isinstance(a, MomentBelief) and isinstance(b, MomentBelief):
        return abs(a.mean - b.mean)
    raise ValueError("belief mode mismatch")


def profile_distance(p: BeliefProfile, q: BeliefProfile) -> float:
    """Product metric realized as the max over holons."""
    if len(p) != len(q):
        raise ValueError("belief profiles have different holon counts")
    return max(belief_distance(a, b) for a, b in zip(p.beliefs, q.beliefs))


def resample(a: ParticleMeasure, target_size: int, rng: np.random.Generator) -> ParticleMeasure:
    """Systematic resampling to ``target_size`` equal-weight particles."""
    if target_size < 1:
        raise ValueError("target_size must be >= 1")
    cdf = np.cumsum(a.weights)
    cdf[-1] = 1.0
    positions = (rng.random() + np.arange(target_size)) / target_size
    idx = np.searchsorted(cdf, positions, side="right")
    idx = np.minimum(idx, len(a) - 1)
    return ParticleMeasure.uniform(a.values[idx])


def mixture(
    a: Belief,
    b: Belief,
    beta: float,
    cap: int | None = None,
    rng: np.random.Generator | None = None,
) -> Belief:
    """(1 - beta) a + beta b as measures.

    Particle mixtures are compressed back to ``cap`` atoms by systematic
    resampling when the union exceeds it; ``cap=None`` keeps the exact union.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if mode_of(a) != mode_of(b):
        raise ValueError("cannot mix particle and moment beliefs")
    if isinstance(a, MomentBelief):
        m = (1 - beta) * a.mean + beta * b.mean
        gap = a.mean - b.mean
        var = (1 - beta) * a.variance + beta * b.variance + beta * (1 - beta) * gap * gap
        return MomentBelief(m, var)
    if beta == 0.0:
        return a
    if beta == 1.0:
        out = b
    else:
        out = ParticleMeasure.normalized(
            np.concatenate((a.values, b.values)),
            np.concatenate(((1 - beta) * a.weights, beta * b.weights)),
        )
    if cap is not None and len(out) > cap:
        if rng is None:
            raise ValueError("compression requires an rng stream")
        out = resample(out, cap, rng)
    return out


def pushforward(
    game: "GameSpec",
    holon: int,
    profile: "StrategyProfile",
    beliefs: BeliefProfile,
    n_samples: int,
    rng: np.random.Generator,
) -> Belief:
    """Distribution of holon ``holon``'s outcome under ``profile``.

    Particle mode returns ``n_samples`` equal-weight outcome draws. Moment mode
    returns the game's analytic moments when it has them, otherwise the
    moments of a sample.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if beliefs.mode == MOMENT:
        moments = game.outcome_moments(holon, profile, beliefs)
        if moments is not None:
            m, v = moments
            if not (math.isfinite(m) and math.isfinite(v)):
                raise NumericError(f"non-finite outcome moments for holon {holon}")
            return MomentBelief(m, v)
    omega = game.sample_outcomes(holon, profile, beliefs, n_samples, rng)
    if not np.all(np.isfinite(omega)):
        raise NumericError(f"outcome map returned a non-finite value for holon {holon}")
    if beliefs.mode == MOMENT:
        return MomentBelief(float(omega.mean()), float(omega.var()))
    return ParticleMeasure.uniform(omega)
