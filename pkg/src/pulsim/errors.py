"""Exception hierarchy.

``ModelError`` subclasses signal a problem inside a simulated run (a data
hazard, an impossible schedule); the CLI maps them to exit status 1.
``ConfigError`` subclasses are user-input problems and map to exit status 2.
"""


class PulsimError(Exception):
    pass


class ModelError(PulsimError):
    pass


class ConfigError(PulsimError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# sim-core
class SchedulingInPast(ModelError):
    pass


class EventLimitExceeded(ModelError):
    pass


# memory
class ZeroSizeTransfer(ConfigError):
    pass


class AddressOutOfRange(ConfigError):
    pass


class EmptyWindow(ValueError):
    pass


# scratchpad
class OutOfBounds(ModelError):
    pass


class ReadDuringPendingPreload(ModelError):
    pass


class WriteDuringPendingUnload(ModelError):
    pass


class ScratchpadOverflow(ModelError):
    pass


# pul engine / pe
class InvalidTransferSize(ConfigError):
    pass


class UnknownTasklet(ModelError):
    pass


# workloads
class InvalidRegion(ConfigError):
    pass


class RowTooLarge(ConfigError):
    pass


# analysis
class WorkMismatch(ValueError):
    pass


class NotSaturable(PulsimError):
    pass
