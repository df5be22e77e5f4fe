"""Target-signature eigenvalues of thin screens from far-field data."""

from .coefficients import PiecewiseField, SurfaceCoefficients
from .errors import (AdmissibilityError, ConfigError, DomainError, GeometryError,
                     IncompatibilityError, MeshIntegrityError, ParameterError, ScreenSigError,
                     SolverError, SpectralError)
from .geometry import CrackMesh, build_screen_disk_mesh

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "ConfigError", "CrackMesh", "DomainError", "GeometryError",
    "IncompatibilityError", "MeshIntegrityError", "ParameterError", "PiecewiseField",
    "ScreenSigError", "SolverError", "SpectralError", "SurfaceCoefficients",
    "build_screen_disk_mesh",
]
