"""Exception types shared across the simulator."""


class WcpsError(Exception):
    """Base class for simulator errors."""


class ConfigError(WcpsError):
    """Invalid configuration; the message names the offending field."""


class SolverError(WcpsError):
    """A numerical solver failed to converge or its preconditions fail."""


class CertificationError(WcpsError):
    """A mode's closed loop could not be certified stable."""


class InfeasibleScheduleError(WcpsError):
    """The task set does not fit into the round period."""
