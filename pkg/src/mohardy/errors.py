"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class GridMismatchError(ValueError):
    """Two fields live on different grids or have incompatible degrees."""


class SupportError(ValueError):
    """A field is not supported where it is required to be, or a ball wraps."""


class NotClosedError(ValueError):
    """A form that must be closed has a non-negligible exterior derivative."""


class SolverError(RuntimeError):
    """An iterative solver failed to reach its tolerance."""
