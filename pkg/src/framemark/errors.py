"""Exception types shared across the package."""


class FramemarkError(Exception):
    """Base class for all framemark domain errors."""


class DimensionError(FramemarkError):
    """Shapes or lengths of related inputs do not match."""


class ContainerError(FramemarkError):
    """A video container file is malformed or unreadable."""


class InfeasibleError(FramemarkError):
    """A threshold with the requested false-positive bound does not exist."""


class EncoderUnavailableError(FramemarkError):
    """The external video encoder is not configured or not runnable."""


class InitializationError(FramemarkError):
    """A query attack could not construct a valid starting point."""


class OracleError(FramemarkError):
    """A detection oracle raised mid-attack; carries the partial trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
