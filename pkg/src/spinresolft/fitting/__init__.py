"""Least-squares fitting of spin-RESOLFT, coherence, magnetometry and NMR data."""

from .engine import ConvergenceError, DegenerateFitError, FitError, FitResult, fit
from .models import (
    fit_gaussian_center,
    fit_nmr_dip,
    fit_resolft_psf,
    fit_sinusoid_fixed_phase,
    fit_stretched_exponential,
    fit_two_peaks,
    normalize_background,
)
from .spectral import peak_frequency, spectral_response

__all__ = [
    "ConvergenceError",
    "DegenerateFitError",
    "FitError",
    "FitResult",
    "fit",
    "fit_gaussian_center",
    "fit_nmr_dip",
    "fit_resolft_psf",
    "fit_sinusoid_fixed_phase",
    "fit_stretched_exponential",
    "fit_two_peaks",
    "normalize_background",
    "peak_frequency",
    "spectral_response",
]
