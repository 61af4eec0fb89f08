"""Exception hierarchy shared by all episcale modules."""


class EpiscaleError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(EpiscaleError, ValueError):
    """A parameter or state violates its domain (e.g. sigma outside (0, 1))."""


class UnsupportedModelError(EpiscaleError):
    """The requested computation is not defined for this model family."""


class HypothesisViolation(EpiscaleError):
    """The demographic equilibrium is missing, non-unique or non-hyperbolic."""


class NumericalFailure(EpiscaleError):
    """A numerical routine failed to reach its accuracy target."""


class NoConvergence(NumericalFailure):
    """Fixed-point search exhausted its iteration budget."""

    def __init__(self, message, last=None, residual=None):
        super().__init__(message)
        self.last = last
        self.residual = residual


class PartialResult(NumericalFailure):
    """A batch computation failed part-way; ``completed`` holds what finished."""

    def __init__(self, message, completed):
        super().__init__(message)
        self.completed = list(completed)
