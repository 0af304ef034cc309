"""Exception types shared across the package."""


class DirtyAVCError(Exception):
    """Base class for all package errors."""


class DimensionError(DirtyAVCError, ValueError):
    """Vectors of incompatible length were combined."""


class DegenerateInputError(DirtyAVCError, ValueError):
    """A zero vector was given where a direction is required."""


class GeometryError(DirtyAVCError, ValueError):
    """A requested geometric set is empty."""


class DomainError(DirtyAVCError, ValueError):
    """An argument lies outside the region where a formula is defined."""


class ResourceError(DirtyAVCError, RuntimeError):
    """A computation would exceed the configured memory/size envelope."""

    def __init__(self, message, required=None, available=None):
        super().__init__(message)
        self.required = required
        self.available = available


class ConfigError(DirtyAVCError, ValueError):
    """Configuration failed validation.

    ``violations`` lists every problem found, not only the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
