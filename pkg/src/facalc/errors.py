"""Exception types shared across the package."""


class FacalcError(Exception):
    """Base class for all errors raised by facalc."""


class InstanceMismatch(FacalcError):
    """Levels from different level-monoid instances were combined."""


class VariantMismatch(FacalcError):
    """Scalars from different coefficient ring variants were combined."""


class ObjectMismatch(FacalcError):
    """An element or map was used with incompatible quiver objects."""


class DegreeMismatch(FacalcError):
    """A component violates its declared degree shift."""


class LevelViolation(FacalcError):
    """A component violates its declared level bound."""


class ConvergenceUndecided(FacalcError):
    """An infinite sum could not be soundly bounded within the window."""


class LeibnizResidual(FacalcError):
    """A solver output failed its coderivation consistency check."""


class ParseError(FacalcError):
    """A structure file is malformed.  Carries a location string."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location
        self.message = message


class ResolveError(FacalcError):
    """A structure file references an undeclared name."""
