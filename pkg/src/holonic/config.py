"""Run configuration: a sectioned key = value file with every default embedded.

Sections are ``[game]``, ``[learner]``, ``[solver]`` and ``[run]``. Unknown
sections or keys are rejected, and every range check of the underlying types
runs at load time.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from holonic.errors import ConfigError
from holonic.games import make_game
from holonic.learner import LearnerOptions, StepSchedule
from holonic.measures import MODES
from holonic.model import COUPLINGS, parse_types
from holonic.solvers import SolverConfig


@dataclass(frozen=True)
class GameConfig:
    kind: str = "public_good"
    M: int = 3
    n: int = 5
    D: float = 3.0
    kappa: float = 0.2
    gamma: float = 0.1
    rho: float = 0.0
    type_distribution: str = "uniform"


@dataclass(frozen=True)
class LearnerConfig:
    a0: float = 0.5
    b0: float = 0.5
    exponent_alpha: float = 0.6
    exponent_beta: float = 0.9
    offset: int = 1
    iterations: int = 5000
    n_samples: int = 256
    belief_mode: str = "moment"
    particle_cap: int = 512
    coupling_semantics: str = "belief"
    t_argument: str = "next"


@dataclass(frozen=True)
class RunSettings:
    seed: int = 7
    output_dir: str = "out"


@dataclass(frozen=True)
class RunConfig:
    game: GameConfig = field(default_factory=GameConfig)
    learner: LearnerConfig = field(default_factory=LearnerConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    run: RunSettings = field(default_factory=RunSettings)

    # derived objects ---------------------------------------------------

    def build_game(self):
        g = self.game
        return make_game(
            g.kind, g.M, g.n, g.D, g.kappa, g.gamma, g.rho,
            parse_types(g.type_distribution), self.learner.coupling_semantics,
        )

    def schedule(self) -> StepSchedule:
        lc = self.learner
        return StepSchedule(lc.a0, lc.b0, lc.exponent_alpha, lc.exponent_beta, lc.offset)

    def learner_options(self, force_numeric: bool = False) -> LearnerOptions:
        return LearnerOptions(
            particle_cap=self.learner.particle_cap,
            t_argument=self.learner.t_argument,
            force_numeric=force_numeric,
        )

    def validate(self) -> "RunConfig":
        lc = self.learner
        if lc.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {lc.iterations}")
        if lc.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {lc.n_samples}")
        if lc.belief_mode not in MODES:
            raise ConfigError(f"belief_mode must be one of {MODES}, got {lc.belief_mode!r}")
        if lc.coupling_semantics not in COUPLINGS:
            raise ConfigError(f"coupling_semantics must be one of {COUPLINGS}, got {lc.coupling_semantics!r}")
        if not 0 <= self.run.seed < 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.run.seed}")
        self.build_game()
        self.schedule()
        self.learner_options()
        return self

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply CLI-style overrides: seed, iterations, output_dir, belief_mode (None = keep)."""
        cfg = self
        if overrides.get("seed") is not None:
            cfg = replace(cfg, run=replace(cfg.run, seed=overrides["seed"]))
        if overrides.get("output_dir") is not None:
            cfg = replace(cfg, run=replace(cfg.run, output_dir=str(overrides["output_dir"])))
        learner = {}
        if overrides.get("iterations") is not None:
            learner["iterations"] = overrides["iterations"]
        if overrides.get("belief_mode") is not None:
            learner["belief_mode"] = overrides["belief_mode"]
        if learner:
            cfg = replace(cfg, learner=replace(cfg.learner, **learner))
        return cfg

    # serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in _SECTIONS}

    def to_ini(self) -> str:
        out = io.StringIO()
        for name in _SECTIONS:
            out.write(f"[{name}]\n")
            for key, value in asdict(getattr(self, name)).items():
                out.write(f"{key} = {_format(value)}\n")
            out.write("\n")
        return out.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from None
        unknown = set(parser.sections()) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
        parts = {}
        for name, kind in _SECTIONS.items():
            defaults = kind()
            types = {f.name: type(getattr(defaults, f.name)) for f in fields(kind)}
            values = {}
            if parser.has_section(name):
                for key, raw in parser.items(name):
                    if key not in types:
                        raise ConfigError(f"unknown key {key!r} in section [{name}]")
                    values[key] = _parse(raw, types[key], f"{name}.{key}")
            try:
                parts[name] = kind(**values)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"[{name}]: {exc}") from None
        return cls(**parts).validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_ini(text)


_SECTIONS = {"game": GameConfig, "learner": LearnerConfig, "solver": SolverConfig, "run": RunSettings}


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, kind: type, where: str):
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind.__name__}") from None
    return raw


def default_config_text() -> str:
    return RunConfig().to_ini()
