"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class ResourceLimitError(RuntimeError):
    """The requested computation exceeds a documented exact-scale cap."""


class DegenerateSchemeError(ValueError):
    """Interval scheme parameters leave no usable local interval."""


class MassMismatchError(ValueError):
    """Two measures that must carry equal total mass do not."""


class InvalidWitnessError(ValueError):
    """A purported 1-Lipschitz witness violates the slope bound."""


class SupportViolationError(ValueError):
    """A measure puts mass outside the support required by a constraint."""


class ConstructionFailedError(RuntimeError):
    """A construct-then-verify procedure failed its verification."""


class RateMismatchError(ValueError):
    """Coefficient blocks were built at an incompatible rate parameter."""
