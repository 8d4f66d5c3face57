"""Public-good contribution game with a coupled failure threshold.

Each agent pays ``x**2 / 2`` for contributing ``x`` and bears the holon's
degree of failure ``1 - omega`` scaled by ``(D - xi)``. The holon outcome is
the mean contribution minus a threshold that rises with the failure of the
other holons:

    omega_i = X_i - kappa - gamma * sum_{j != i} (1 - m_j)

where ``m_j`` are the belief means about the other holons. With ``rho > 0``
the failure penalty is additionally scaled by ``1 + rho * Fbar`` where
``Fbar`` is the mean expected failure of the other holons; this makes best
responses depend on beliefs. ``rho = 0`` is the plain game.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from holonic.errors import ConfigError, UnsupportedRegimeError
from holonic.model import GameSpec, StrategyProfile, UniformTypes, clipped_moments


@dataclass(frozen=True)
class PublicGoodParams:
    D: float = 3.0
    kappa: float = 0.2
    gamma: float = 0.1
    rho: float = 0.0

    def gamma_bound(self, M: int) -> float:
        return (1.0 - self.kappa) / (M - 1)

    def validate(self, M: int) -> None:
        for name in ("D", "kappa", "gamma", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if not self.D > 1:
            raise ConfigError(f"D={self.D} must exceed 1")
        if not 0 < self.kappa < 1:
            raise ConfigError(f"kappa={self.kappa} must lie in (0, 1)")
        bound = self.gamma_bound(M)
        if not 0 <= self.gamma < bound:
            raise ConfigError(
                f"gamma={self.gamma} violates 0 <= gamma < (1 - kappa)/(M - 1) = {bound:.6g}"
            )
        if not self.rho >= 0:
            raise ConfigError(f"rho={self.rho} must be >= 0")


def _threshold(p: PublicGoodParams, external_means) -> float:
    ext = np.asarray(external_means, dtype=float)
    return p.kappa + p.gamma * float(np.sum(1.0 - ext))


def _failure_scale(p: PublicGoodParams, external_means) -> float:
    if p.rho == 0.0:
        return 1.0
    ext = np.asarray(external_means, dtype=float)
    return 1.0 + p.rho * float(np.mean(1.0 - ext))


def outcome_map(params: PublicGoodParams, holon: int, actions, external_means) -> float:
    """Holon outcome X - kappa_tilde for one joint action vector (no clipping)."""
    X = float(np.mean(actions))
    return X - _threshold(params, external_means)


def analytic_best_response(params: PublicGoodParams, n: int, xi, external_means):
    """Pointwise argmin of the interim cost: clip((D - xi)(1 + rho Fbar) / n, 0, 1)."""
    scale = _failure_scale(params, external_means)
    return np.clip((params.D - np.asarray(xi, dtype=float)) * scale / n, 0.0, 1.0)


def analytic_equilibrium(params: PublicGoodParams, M: int, n: int, type_mean: float):
    """Symmetric equilibrium ``(slope, intercept, E[omega])``.

    Raises UnsupportedRegimeError when some type in [0, 1] would be clipped,
    since the closed form then no longer holds.
    """
    c = (params.D - type_mean) / n
    g = params.gamma * (M - 1)
    if params.rho == 0.0:
        EX = c
        m = (EX - params.kappa - g) / (1.0 - g)
        scale = 1.0
    else:
        # unknowns (E[X], m):  E[X] + c rho m = c (1 + rho);  -E[X] + (1 - g) m = -kappa - g
        A = np.array([[1.0, c * params.rho], [-1.0, 1.0 - g]])
        b = np.array([c * (1.0 + params.rho), -params.kappa - g])
        EX, m = np.linalg.solve(A, b)
        scale = 1.0 + params.rho * (1.0 - m)
    slope, intercept = -scale / n, params.D * scale / n
    _check_interior(slope, intercept)
    return slope, intercept, float(m)


def _check_interior(slope: float, intercept: float) -> None:
    lo, hi = sorted((intercept, slope + intercept))
    if not (lo > 0.0 and hi < 1.0):
        raise UnsupportedRegimeError(
            f"equilibrium strategy maps types to [{lo:.4g}, {hi:.4g}], outside (0, 1); "
            "clipping breaks the closed form"
        )


@dataclass(frozen=True)
class Equilibrium:
    """Per-holon reference equilibrium."""

    slopes: np.ndarray
    intercepts: np.ndarray
    means: np.ndarray
    variances: np.ndarray

    def profile(self, n: int) -> StrategyProfile:
        M = self.slopes.size
        theta = np.empty((M, n, 2))
        theta[..., 0] = self.slopes[:, None]
        theta[..., 1] = self.intercepts[:, None]
        return StrategyProfile(theta)

    @property
    def theta1_avg(self) -> float:
        return float(self.slopes.mean())

    @property
    def theta0_avg(self) -> float:
        return float(self.intercepts.mean())

    def as_dict(self) -> dict:
        return {
            "theta1": self.slopes.tolist(),
            "theta0": self.intercepts.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }


class PublicGoodGame(GameSpec):
    kind = "public_good"
    has_analytic_best_response = True

    def __init__(
        self,
        M: int = 3,
        n: int = 5,
        params: PublicGoodParams | Sequence[PublicGoodParams] = PublicGoodParams(),
        types=None,
        coupling: str = "belief",
    ):
        super().__init__(M, n, types if types is not None else UniformTypes(), coupling)
        if isinstance(params, PublicGoodParams):
            params = (params,) * self.M
        params = tuple(params)
        if len(params) != self.M:
            raise ConfigError(f"got {len(params)} parameter sets for {self.M} holons")
        for p in params:
            p.validate(self.M)
        self.params = params
        self._realized_inverse = None

    @property
    def symmetric(self) -> bool:
        return all(p == self.params[0] for p in self.params)

    # hooks -------------------------------------------------------------

    def cost(self, holon, x_own, mean_action, xi_own, external_means):
        p = self.params[holon]
        omega = mean_action - _threshold(p, external_means)
        return 0.5 * x_own * x_own + (1.0 - omega) * (p.D - xi_own) * _failure_scale(p, external_means)

    def outcome(self, holon, mean_action, external_means):
        return mean_action - _threshold(self.params[holon], external_means)

    def analytic_best_response(self, holon, xi, external_means):
        return analytic_best_response(self.params[holon], self.n, xi, external_means)

    def outcome_moments(self, holon, profile, beliefs):
        if self.coupling == "realized":
            return self._realized_moments(holon, profile)
        action_moments = self._action_moments(holon, profile)
        if action_moments is None:
            return None
        EX, VX = action_moments
        return EX - _threshold(self.params[holon], beliefs.external_means(holon)), VX

    def _action_moments(self, holon, profile):
        ms, vs = [], []
        for k in range(self.n):
            mv = clipped_moments(self, profile.strategy(holon, k))
            if mv is None:
                return None
            ms.append(mv[0])
            vs.append(mv[1])
        return sum(ms) / self.n, sum(vs) / (self.n * self.n)

    # realized (simultaneous) coupling -------------------------------------

    def _realized_system(self):
        """A, c with  A omega = X - c  for the simultaneous outcome equations."""
        M = self.M
        gam = np.array([p.gamma for p in self.params])
        A = np.eye(M) - gam[:, None] * (1.0 - np.eye(M))
        c = np.array([p.kappa + p.gamma * (M - 1) for p in self.params])
        return A, c

    def realized_outcomes(self, mean_actions: np.ndarray) -> np.ndarray:
        """Solve omega_i = X_i - kappa - gamma sum_{j != i} (1 - omega_j) per sample row."""
        A, c = self._realized_system()
        if self._realized_inverse is None:
            self._realized_inverse = np.linalg.inv(A)
        return (mean_actions - c) @ self._realized_inverse.T

    def _realized_moments(self, holon, profile):
        EX, VX = [], []
        for j in range(self.M):
            mv = self._action_moments(j, profile)
            if mv is None:
                return None
            EX.append(mv[0])
            VX.append(mv[1])
        A, c = self._realized_system()
        Ainv = np.linalg.inv(A)
        mean = Ainv[holon] @ (np.array(EX) - c)
        var = float(np.sum(Ainv[holon] ** 2 * np.array(VX)))
        return float(mean), var

    # reference equilibrium ---------------------------------------------

    def equilibrium(self) -> Equilibrium:
        """Interior equilibrium for possibly heterogeneous holons (linear solve).

        Belief means solve
            m_i - sum_{j != i} (gamma_i - c_i rho_i / (M - 1)) m_j
                = c_i (1 + rho_i) - kappa_i - gamma_i (M - 1),
        with c_i = (D_i - E[xi]) / n; the realized coupling has the same means.
        """
        M, n = self.M, self.n
        tm = self.types.mean
        A = np.eye(M)
        b = np.empty(M)
        for i, p in enumerate(self.params):
            ci = (p.D - tm) / n
            off = p.gamma - ci * p.rho / (M - 1)
            A[i, [j for j in range(M) if j != i]] = -off
            b[i] = ci * (1.0 + p.rho) - p.kappa - p.gamma * (M - 1)
        means = np.linalg.solve(A, b)
        slopes, intercepts, variances = np.empty(M), np.empty(M), np.empty(M)
        for i, p in enumerate(self.params):
            scale = 1.0 + p.rho * float(np.mean(1.0 - np.delete(means, i)))
            slopes[i], intercepts[i] = -scale / n, p.D * scale / n
            _check_interior(slopes[i], intercepts[i])
            variances[i] = slopes[i] ** 2 * self.types.variance / n
        if self.coupling == "realized":
            Ainv = np.linalg.inv(self._realized_system()[0])
            variances = (Ainv**2) @ variances
        return Equilibrium(slopes, intercepts, means, variances)

    def outcome_range_warning(self) -> str | None:
        """Message when equilibrium E[omega] +- 4 sd leaves [0, 1] (outcomes are not clipped)."""
        try:
            eq = self.equilibrium()
        except UnsupportedRegimeError:
            return None
        sd = np.sqrt(eq.variances)
        lo, hi = float(np.min(eq.means - 4 * sd)), float(np.max(eq.means + 4 * sd))
        if lo < 0.0 or hi > 1.0:
            return f"equilibrium outcome band [{lo:.4g}, {hi:.4g}] (mean +- 4 sd) leaves [0, 1]"
        return None

    def warn_outcome_range(self) -> None:
        msg = self.outcome_range_warning()
        if msg:
            warnings.warn(msg, stacklevel=2)


class DecoupledGame(PublicGoodGame):
    """Independent holons: gamma = rho = 0, so the equilibrium is per holon."""

    kind = "decoupled"


def decoupled_game(
    M: int = 3, n: int = 5, D: float | Sequence[float] = 3.0, kappa: float = 0.2, types=None, coupling: str = "belief"
) -> DecoupledGame:
    Ds = [float(D)] * M if np.isscalar(D) else [float(d) for d in D]
    params = [PublicGoodParams(D=d, kappa=kappa, gamma=0.0, rho=0.0) for d in Ds]
    return DecoupledGame(M, n, params, types, coupling)


def make_game(kind: str, M: int, n: int, D: float, kappa: float, gamma: float, rho: float, types=None, coupling="belief"):
    if kind == "public_good":
        return PublicGoodGame(M, n, PublicGoodParams(D, kappa, gamma, rho), types, coupling)
    if kind == "decoupled":
        if gamma != 0.0 or rho != 0.0:
            raise ConfigError("decoupled game requires gamma = 0 and rho = 0")
        return decoupled_game(M, n, D, kappa, types, coupling)
    raise ConfigError(f"unknown game kind {kind!r}")
