"""Exception hierarchy shared by all modules."""


class ToaError(Exception):
    """Base class for library errors."""


class DomainError(ToaError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(ToaError, ArithmeticError):
    """A series or iteration failed to converge."""


class NumericInstabilityError(ToaError, ArithmeticError):
    """A conserved quantity drifted beyond tolerance."""


class DepthError(ToaError, ValueError):
    """A correction order beyond the supported cost budget was requested."""


class SelectionError(ToaError, LookupError):
    """No eigenmode matches the requested selection."""


class ConfigError(ToaError, ValueError):
    """Invalid run configuration."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
