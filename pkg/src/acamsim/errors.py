"""Exception hierarchy shared by all simulator modules."""


class AcamError(Exception):
    """Base class for simulator errors."""


class InputError(AcamError, ValueError):
    """An argument violates an operation's precondition."""


class SolverError(AcamError):
    """A branch solve could not bracket a root."""


class OutOfRangeError(AcamError, ValueError):
    """A requested value lies outside the achievable dynamic range."""


class InvalidControlError(AcamError):
    """Conflicting control levels were applied to the periphery."""


class ContentionError(AcamError):
    """The shared programming circuit is already busy."""


class FingerprintError(AcamError):
    """A lookup table was built for different parameters than the live ones."""


class BuildError(AcamError):
    """A lookup table has no usable entries."""
