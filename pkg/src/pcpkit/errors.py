"""Exception types shared across the package."""


class PcpError(Exception):
    """Base class for every error raised by pcpkit."""


class DomainError(PcpError, ValueError):
    pass


class ParameterError(PcpError, ValueError):
    pass


class ShapeError(PcpError, ValueError):
    pass


class PreconditionError(PcpError, ValueError):
    pass


class ResourceError(PcpError, RuntimeError):
    """A computation would exceed its configured budget."""


class NotFoundError(PcpError, RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ConstructionError(PcpError, RuntimeError):
    pass


class FormatError(PcpError, ValueError):
    """Malformed input file."""
