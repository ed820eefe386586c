"""Exception hierarchy shared by all modules."""


class MBQCError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MBQCError, ValueError):
    """Invalid gate name, noise parameter, qubit index or CLI setting."""


class ImpossibleOutcomeError(MBQCError):
    """A measurement branch with (numerically) zero probability was requested."""


class EstimationError(MBQCError):
    """Tomographic reconstruction could not be carried out."""
