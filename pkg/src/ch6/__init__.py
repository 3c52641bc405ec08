"""Pseudo-spectral simulation and verification tools for a sixth-order Cahn-Hilliard model."""

from .errors import BlowUpError, ConfigurationError, DomainError
from .spectral import GridSpec, NormSpec, RealField, SpectralField

__all__ = [
    "BlowUpError",
    "ConfigurationError",
    "DomainError",
    "GridSpec",
    "NormSpec",
    "RealField",
    "SpectralField",
]

__version__ = "0.1.0"
