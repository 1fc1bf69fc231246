"""Exception types raised across the toolkit."""


class PodFrontError(Exception):
    """Base class for all toolkit errors."""


class EmptyFront(PodFrontError):
    pass


class BadScenarioCount(PodFrontError):
    pass


class ParseError(PodFrontError):
    """Malformed input file. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DimensionMismatch(PodFrontError):
    pass


class BadAlpha(PodFrontError):
    pass


class BackendError(PodFrontError):
    pass


class NumericalFailure(PodFrontError):
    pass


class EndpointsTimeout(PodFrontError):
    pass


class BadReferencePoint(PodFrontError):
    pass
