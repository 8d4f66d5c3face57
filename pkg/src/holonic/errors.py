"""Exception hierarchy. The CLI maps each class to an exit code."""


class HolonicError(Exception):
    pass


class InvalidMeasureError(HolonicError, ValueError):
    pass


class ConfigError(HolonicError, ValueError):
    pass


class NumericError(HolonicError, ArithmeticError):
    pass


class NonConvergenceError(HolonicError):
    def __init__(self, message: str, distance: float, iterations: int):
        super().__init__(message)
        self.distance = distance
        self.iterations = iterations


class UnsupportedRegimeError(HolonicError, ValueError):
    """Closed form requested where clipping is active."""
