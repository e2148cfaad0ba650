"""Exception hierarchy shared across the package."""


class WmhsegError(Exception):
    """Base class for all package errors."""


class ContractError(WmhsegError):
    """Inputs violate a documented precondition (shape/alignment mismatch etc.)."""


class ConfigurationError(WmhsegError):
    """A configuration value is out of its allowed range or infeasible."""


class FormatError(WmhsegError):
    """A file does not conform to the expected on-disk format."""


class UnsupportedTypeError(FormatError):
    """A file uses a datatype outside the supported subset."""


class DivergenceError(WmhsegError):
    """Training loss became non-finite or collapsed to the degenerate optimum."""

    def __init__(self, message, loss_trace=None):
        super().__init__(message)
        self.loss_trace = list(loss_trace) if loss_trace is not None else []
