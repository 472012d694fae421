"""Exception hierarchy shared by all numetric modules."""


class NumetricError(Exception):
    """Base class for every error raised by this package."""


class PlantSyntaxError(NumetricError):
    """A plant document could not be parsed.

    ``position`` is a character offset into the document, or ``None``.
    """

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class ValidationError(NumetricError):
    """A parsed model violates a structural invariant."""


class GridError(NumetricError):
    """Operands live on different grids or have incompatible shapes."""


class RefinementExhausted(NumetricError):
    """Grid doubling hit the configured refinement limit."""


class NotInvertible(NumetricError):
    """A function vanishes (numerically) somewhere on the grid."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(message)


class Unresolved(NumetricError):
    """An index could not be determined reliably at the available resolution."""


class NonInteger(Unresolved):
    """Accumulated phase is not close to a multiple of 2*pi."""


class NonLattice(Unresolved):
    """Average winding of a non-commensurate exponential sum did not converge."""


class FactorizationError(NumetricError):
    """A coprime factorization could not be built or failed verification."""


class RiccatiDivergence(FactorizationError):
    """The Riccati iteration did not reach its residual target."""

    def __init__(self, message, history=()):
        self.history = list(history)
        super().__init__(message)


class NearCircleDegeneracy(FactorizationError):
    """Poles or zeros sit too close to the unit circle."""


class NotEquivalent(NumetricError):
    """Two factorizations do not describe the same plant."""


class SingularLoop(NumetricError):
    """The feedback interconnection is ill-posed at some grid point."""


class CertificateViolation(NumetricError):
    """A robust-stability inequality failed beyond tolerance."""
