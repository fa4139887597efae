"""Exception hierarchy shared by the simulation modules."""


class WGQEDError(Exception):
    """Base class for all package errors."""


class DomainError(WGQEDError, ValueError):
    """Argument outside the domain of a formula."""


class EvanescentModeError(DomainError):
    """Mode cutoff at or above the transition frequency."""


class ModeDecoupledError(DomainError):
    """Transverse mode has a node at the emitter position."""


class NoCoupledModesError(WGQEDError):
    pass


class DivergedError(WGQEDError, ArithmeticError):
    def __init__(self, t):
        super().__init__(f"non-finite state encountered at t={t!r}")
        self.t = t


class QueryAheadError(WGQEDError, ValueError):
    pass


class ConvergenceError(WGQEDError, ArithmeticError):
    pass


class InvalidDelayError(WGQEDError, ValueError):
    pass


class ConfluentPoleError(WGQEDError, ArithmeticError):
    pass


class OrderCapError(WGQEDError, ValueError):
    pass


class BasisUnavailableError(WGQEDError, ValueError):
    pass


class NormViolationError(WGQEDError, ValueError):
    pass


class FitDomainError(WGQEDError, ValueError):
    pass


class ConfigError(WGQEDError, ValueError):
    """Invalid run configuration; message names the offending field."""


class MutualExclusionError(ConfigError):
    pass


class UnknownPresetError(ConfigError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""
