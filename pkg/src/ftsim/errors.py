"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class ConfigurationError(SimulationError):
    """A parameter is outside its allowed range or shape."""


class CrashStopViolation(SimulationError):
    """An operation was attempted on a terminated process."""


class EncodingError(SimulationError):
    """A logical process could not be built from the given parts."""


class TrackingError(SimulationError):
    """A fault-frame update referenced components that do not exist."""
