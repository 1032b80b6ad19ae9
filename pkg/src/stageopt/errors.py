"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments violating its contract."""


class ConfigurationError(ValueError):
    """A configuration value is missing or out of its allowed domain."""


class NoSolutionError(RuntimeError):
    """A placement request cannot be satisfied by the available machines."""


class SizeGuardExceeded(ValueError):
    """A brute-force reference was asked to enumerate beyond its size guard."""


class TraceLoadError(ValueError):
    """A trace file failed to parse or violates a schema invariant."""
