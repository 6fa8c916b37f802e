"""Exception types raised across the package."""


class InvalidStateError(ValueError):
    """A vector or spinor does not describe a valid pure state."""


class BasisMismatchError(ValueError):
    """Basis labels belong to different physical systems."""


class DegenerateStateError(ValueError):
    """A state or measurement branch carries zero weight."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class InsufficientDataError(ValueError):
    """Too few events to form an estimate."""
