"""Exception hierarchy shared by all modules."""


class QuenchError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(QuenchError):
    """Invalid or inconsistent configuration (bad extent, time grid, keys)."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations else [message]


class GeometryError(QuenchError):
    pass


class ParameterError(QuenchError):
    pass


class AnisotropyError(QuenchError):
    pass


class RegimeError(QuenchError):
    """Operation requested in a dynamical regime where it is not defined."""


class SizeError(QuenchError):
    pass


class NoSignalError(QuenchError):
    pass


class UnstableRegimeError(RegimeError):
    pass


class NoFrontError(QuenchError):
    pass


class UndefinedPhaseError(QuenchError):
    pass


class SingularityError(QuenchError):
    pass
