"""Polariton spectra, field profiles and spontaneous emission of a planar cavity with a dipole wall."""

from .model import BathParams, DampingProfile, ParameterError, SystemParams, validate
from .spectrum import SpectrumResult, solve_spectrum
from .hopfield import PolaritonMode, polariton_modes
from .transfermatrix import classical_spectrum
from .inputoutput import EmissionCurve, emission_sweep

__all__ = [
    "BathParams", "DampingProfile", "ParameterError", "SystemParams", "validate",
    "SpectrumResult", "solve_spectrum", "PolaritonMode", "polariton_modes",
    "classical_spectrum", "EmissionCurve", "emission_sweep",
]
