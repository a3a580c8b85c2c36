"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the function is defined."""


class PoleError(ArithmeticError):
    """Evaluation hit (or came within tolerance of) a pole.

    ``location`` carries the best available estimate of the offending pole,
    in whatever variable the raising function works with.
    """

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class UnsupportedParameters(ValueError):
    """Input is valid physics but outside what the closed forms cover."""


class DegenerateOrbit(ValueError):
    """The requested orbit collapses to a point or to the separatrix."""


class NoBlowup(ValueError):
    """Asked for a blow-up time of an orbit that stays bounded."""


class RealityError(ArithmeticError):
    """A complex representation of a real orbit left a non-negligible imaginary part."""
