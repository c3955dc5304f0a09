"""Exception types. Each carries the CLI exit code it maps to."""


class KCSRError(Exception):
    exit_code = 1


class InputError(KCSRError, ValueError):
    """Malformed or out-of-range input."""

    exit_code = 1


class NumericalError(KCSRError, ArithmeticError):
    """Non-finite values or a singular system during optimization.

    ``state`` holds whatever diagnostics the raiser had at hand
    (last valid gamma, iteration, step size, ...).
    """

    exit_code = 2

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state or {}


class ResourceError(KCSRError, MemoryError):
    """Refusal to allocate something larger than the configured cap."""

    exit_code = 3
