"""Exception types shared across the package."""


class FGBoltzError(Exception):
    """Base class for all package errors."""


class DomainError(FGBoltzError, ValueError):
    """A parameter lies outside its admissible range."""


class SymmetryError(FGBoltzError):
    """A field expected to be Hermitian has a significant imaginary residue."""


class QuadratureError(FGBoltzError):
    """A quadrature self-check failed its tolerance."""


class FormatError(FGBoltzError):
    """A weight-table or snapshot file is corrupt or incompatible."""


class ConfigMismatch(FGBoltzError, ValueError):
    """Two objects were built for different spectral configurations."""


class ResourceError(FGBoltzError):
    """A requested computation exceeds the configured work budget."""


class BlowupError(FGBoltzError):
    """Time integration diverged.

    Attributes:
        t: simulation time at which the blow-up was detected.
    """

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
