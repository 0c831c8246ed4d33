"""Exception types shared across the package.

The CLI maps these onto exit codes: validation problems exit 2,
bracket/resource exhaustion exits 3, anything else exits 1.
"""


class TwoStageError(Exception):
    """Base class for all package-specific errors."""


class ParameterError(TwoStageError, ValueError):
    """A numeric or structural argument violates a precondition."""


class DomainError(TwoStageError, ValueError):
    """A site, path or configuration lies outside the declared domain."""


class BracketError(TwoStageError, RuntimeError):
    """A root bracket for the critical-rate search could not be established."""


class ResourceError(TwoStageError, RuntimeError):
    """A requested exact computation exceeds the configured size limits."""
