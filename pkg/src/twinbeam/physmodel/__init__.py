"""Doppler-broadened SFWM biphoton model for warm-vapour twin beams."""
from .biphoton import (
    ModelProfile,
    SpectralGrid,
    TemporalAmplitude,
    biphoton_psi,
    biphoton_spectrum,
    coincidence_profile,
    direct_dft,
    fit_amplitudes,
    fit_scale,
    parasitic_density,
    profile_summary,
    spectrum_to_time,
)
from .doppler import maxwell_boltzmann_pdf, pole_average
from .medium import (
    AtomicMedium,
    FieldGeometry,
    ModelConfig,
    ParasiticChannel,
    default_channels,
    default_params,
    dipole_from_linewidth,
    load_params,
)
from .optics import chi3, chi_conjugate, chi_parasitic, chi_probe, mismatch, phase_matching, wavenumbers

__all__ = [
    "AtomicMedium", "FieldGeometry", "ModelConfig", "ModelProfile", "ParasiticChannel",
    "SpectralGrid", "TemporalAmplitude", "biphoton_psi", "biphoton_spectrum", "chi3",
    "chi_conjugate", "chi_parasitic", "chi_probe", "coincidence_profile", "default_channels",
    "default_params", "dipole_from_linewidth", "direct_dft", "fit_amplitudes", "fit_scale",
    "load_params", "maxwell_boltzmann_pdf", "mismatch", "parasitic_density", "phase_matching",
    "pole_average", "profile_summary", "spectrum_to_time", "wavenumbers",
]
