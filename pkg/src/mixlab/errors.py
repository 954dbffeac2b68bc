"""Exception types shared by all modules."""


class InvalidInputError(ValueError):
    """Input violates a documented precondition."""


class DomainError(ValueError):
    """Parameter outside the mathematical domain of the operation."""


class ResourceError(RuntimeError):
    """Requested computation exceeds a declared size cap."""


class UnsupportedError(ValueError):
    """Valid input that the operation does not cover (e.g. wrong rank)."""
