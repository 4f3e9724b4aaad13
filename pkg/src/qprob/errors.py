"""Exception hierarchy shared by every qprob module."""


class QProbError(Exception):
    """Base class for all errors raised by qprob."""


class IncompatibleEvents(QProbError):
    """Two events of different kinds (or shapes) were combined."""


class ZeroConditionEvent(QProbError):
    """The conditioning event has (numerically) zero probability."""

    def __init__(self, event, probability):
        self.event = event
        self.probability = probability
        super().__init__(f"conditioning event {event!r} has probability {probability:.3e}")


class EnumerationTooLarge(QProbError):
    """A Fock-space enumeration would exceed the configured vector budget."""


class NonHermitian(QProbError):
    pass


class EigenDecompositionFailure(QProbError):
    pass


class DimensionMismatch(QProbError):
    pass


class GridTooSmall(QProbError):
    pass


class ZeroAmplitudeAtX(QProbError):
    pass


class ConfigError(QProbError):
    """Invalid run configuration; ``field`` names the offending JSON path."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
