"""Semantic exception hierarchy shared across the package."""


class BoolthreshError(Exception):
    """Base class for all package errors."""


class ValidationError(BoolthreshError, ValueError):
    """Invalid input: malformed spec, non-convex table, bad config."""


class ConsistencyError(BoolthreshError, RuntimeError):
    """Internal cross-check failed; indicates a solver bug, never user error."""


class QuadratureError(BoolthreshError, RuntimeError):
    """Numerical integration did not reach the requested tolerance."""
