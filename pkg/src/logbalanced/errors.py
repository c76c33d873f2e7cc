"""Exception hierarchy shared by every module."""


class LogBalancedError(Exception):
    """Base class for all library errors."""


class DomainError(LogBalancedError, ValueError):
    pass


class ResourceError(LogBalancedError):
    """An integer grew past the configured bit bound, or an enumeration blew up."""


class InsufficientDepth(LogBalancedError):
    """Not enough partial quotients are known to answer the query."""


class EndpointHit(LogBalancedError):
    """The query point is an endpoint of the partition at the requested depth."""


class PrecisionError(LogBalancedError):
    """The point's resolution (or a certified evaluation) cannot decide the answer."""


class DegenerateAlpha(LogBalancedError, ValueError):
    pass


class NotSelfRefining(LogBalancedError):
    pass


class CapExceeded(LogBalancedError):
    def __init__(self, cap, message=None):
        super().__init__(message or f"containment still holds at cap={cap}")
        self.cap = cap


class ConfigError(LogBalancedError, ValueError):
    pass
