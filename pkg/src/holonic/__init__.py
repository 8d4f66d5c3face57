"""Bayesian holonic equilibria: two-timescale learning, Picard solver, closed-form oracles."""

from holonic.errors import (
    ConfigError,
    HolonicError,
    InvalidMeasureError,
    NonConvergenceError,
    NumericError,
    UnsupportedRegimeError,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HolonicError",
    "InvalidMeasureError",
    "NonConvergenceError",
    "NumericError",
    "UnsupportedRegimeError",
]
