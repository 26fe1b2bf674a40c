"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class LabError(Exception):
    exit_code = 1
    kind = "error"


class ConfigError(LabError, ValueError):
    """Malformed or unknown configuration. ``key`` is the dotted key path, if known."""

    exit_code = 2
    kind = "config"

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DomainError(LabError, ValueError):
    exit_code = 2
    kind = "domain"


class CapabilityError(LabError):
    """The requested operation is not supported by the given law (or is infeasible)."""

    exit_code = 3
    kind = "capability"


class SizeError(CapabilityError):
    kind = "size"


class ShapeError(CapabilityError):
    kind = "shape"


class ResolutionError(LabError):
    exit_code = 4
    kind = "resolution"


class NumericError(LabError):
    exit_code = 4
    kind = "numeric"


class InequalityViolation(LabError, AssertionError):
    exit_code = 1
    kind = "violation"
