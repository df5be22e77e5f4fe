"""Exception hierarchy shared across the package."""


class ScreenSigError(Exception):
    """Base class for all package errors."""


class GeometryError(ScreenSigError, ValueError):
    """Invalid geometric input (degenerate arc, bad radii, ...)."""


class MeshIntegrityError(ScreenSigError):
    """A mesh violates one of its structural invariants."""


class AdmissibilityError(ScreenSigError, ValueError):
    """Surface coefficients violate a required bound."""


class DomainError(ScreenSigError, ValueError):
    """Evaluation point outside the domain of a field."""


class ParameterError(ScreenSigError, ValueError):
    """Numerical parameter outside its admissible range."""


class SolverError(ScreenSigError):
    """Linear solve failed or is numerically unreliable."""


class SpectralError(ScreenSigError):
    """Eigenvalue computation failed (e.g. no regular shift found)."""


class IncompatibilityError(ScreenSigError, ValueError):
    """Two objects that must share k / directions / geometry do not."""


class ConfigError(ScreenSigError, ValueError):
    """Scenario file does not match the expected schema."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
