"""Doppler-averaged susceptibilities, wavenumbers and longitudinal phase matching.

``delta`` is the probe detuning from its line centre ω_pr0; the conjugate sits
at ω_c0 - δ. Velocity-dependent detunings, with v along the beams:

    Δ_pr(δ, v) = Δ + δ - k_pr v
    Δ_c(δ, v)  = Δ + ω₃₂ - δ - k_c v
    Δ₃₂(δ, v)  = Δ₃₂ + 2δ - (k_pr - k_c) v

where k_pr = (ω_pr0 + δ)/c and k_c = (ω_c0 - δ)/c are vacuum wavenumbers.
Every susceptibility is a velocity average of a product of simple poles,
evaluated by :func:`doppler.pole_average`.
"""
import numpy as np
from scipy import constants as sc

from ..errors import ValidationError
from .doppler import pole_average
from .medium import FieldGeometry


def _delta(delta_rad_s):
    d = np.asarray(delta_rad_s, dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValidationError("detuning must be finite")
    return d


def _geometry(medium, geometry):
    return geometry if geometry is not None else FieldGeometry.from_medium(medium)


def _average(a_cols, k_cols, shape, medium, **quad):
    a = np.stack([np.broadcast_to(c, shape).ravel() for c in a_cols], axis=1)
    k = np.stack([np.broadcast_to(c, shape).ravel() for c in k_cols], axis=1)
    return pole_average(a, k, medium, **quad).reshape(shape)


def chi_probe(delta_rad_s, medium, geometry=None, **quad):
    """Linear probe susceptibility N|μ₀|²/(ε₀ħ) <1/(Δ_pr - iγ)>_v."""
    d = _delta(delta_rad_s)
    g = _geometry(medium, geometry)
    a = medium.pump_detuning_rad_s + d - 1j * medium.excited_decay_rad_s
    k = (g.probe_center_rad_s + d) / sc.c
    return medium.linear_prefactor * _average([a], [k], d.shape, medium, **quad)


def chi_conjugate(delta_rad_s, medium, geometry=None, **quad):
    """Conjugate susceptibility, the probe form scaled by Ω_p²/(4Δ²) and evaluated at ω_c0 - δ."""
    d = _delta(delta_rad_s)
    g = _geometry(medium, geometry)
    a = medium.pump_detuning_rad_s + medium.ground_splitting_rad_s - d - 1j * medium.excited_decay_rad_s
    k = (g.conjugate_center_rad_s - d) / sc.c
    scale = medium.pump_rabi_rad_s**2 / (4.0 * medium.pump_detuning_rad_s**2)
    return medium.linear_prefactor * scale * _average([a], [k], d.shape, medium, **quad)


def chi3_prefactor(medium):
    """N Ω_p² |μ₀|⁴ / (4 ε₀ ħ³ Δ²) in SI units (m²/V² rad/s)."""
    mu = medium.reduced_dipole_C_m
    return (medium.number_density_per_m3 * medium.pump_rabi_rad_s**2 * mu**4
            / (4.0 * sc.epsilon_0 * sc.hbar**3 * medium.pump_detuning_rad_s**2))


def chi3(delta_rad_s, medium, geometry=None, **quad):
    """Third-order susceptibility with conjugate, Raman and probe denominators, velocity averaged."""
    d = _delta(delta_rad_s)
    g = _geometry(medium, geometry)
    gam = medium.excited_decay_rad_s
    k_pr = (g.probe_center_rad_s + d) / sc.c
    k_c = (g.conjugate_center_rad_s - d) / sc.c
    a = [
        medium.pump_detuning_rad_s + medium.ground_splitting_rad_s - d - 1j * gam,
        medium.two_photon_detuning_rad_s + 2.0 * d - 1j * medium.ground_decoherence_rad_s,
        medium.pump_detuning_rad_s + d - 1j * gam,
    ]
    k = [k_c, k_pr - k_c, k_pr]
    return chi3_prefactor(medium) * _average(a, k, d.shape, medium, **quad)


def chi_parasitic(delta_rad_s, channel, medium, **quad):
    """Single-Lorentzian parasitic response N|μ₀|²/(ε₀ħ) <1/(δ - δ_j - q v - iγ_j)>_v.

    The Raman-type transition carries the residual Doppler coefficient
    q = ω₃₂/c of a two-photon process across the ground splitting.
    """
    d = _delta(delta_rad_s)
    a = d - channel.raman_detuning_rad_s - 1j * channel.linewidth(medium)
    q = np.full(d.shape, medium.ground_splitting_rad_s / sc.c)
    return medium.linear_prefactor * _average([a], [q], d.shape, medium, **quad)


def wavenumbers(delta_rad_s, medium, geometry=None, chi_pr=None, chi_c=None, **quad):
    """(k_pr, k_c) = (ω/c)(1 + χ/2) at ω_pr0 + δ and ω_c0 - δ; complex."""
    d = _delta(delta_rad_s)
    g = _geometry(medium, geometry)
    if chi_pr is None:
        chi_pr = chi_probe(d, medium, g, **quad)
    if chi_c is None:
        chi_c = chi_conjugate(d, medium, g, **quad)
    w_pr = g.probe_center_rad_s + d
    w_c = g.conjugate_center_rad_s - d
    return w_pr / sc.c * (1.0 + 0.5 * chi_pr), w_c / sc.c * (1.0 + 0.5 * chi_c)


def csinc(z):
    """sin(z)/z for complex z, equal to 1 at z = 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z * z / 6.0, np.sin(safe) / safe)


def mismatch(delta_rad_s, medium, geometry=None, chi_pr=None, chi_c=None, **quad):
    """Δk = 2k_p - k_pr - k_c. Vacuum parts cancel by energy conservation."""
    d = _delta(delta_rad_s)
    g = _geometry(medium, geometry)
    if chi_pr is None:
        chi_pr = chi_probe(d, medium, g, **quad)
    if chi_c is None:
        chi_c = chi_conjugate(d, medium, g, **quad)
    w_pr = g.probe_center_rad_s + d
    w_c = g.conjugate_center_rad_s - d
    return -(w_pr * chi_pr + w_c * chi_c) / (2.0 * sc.c)


def phase_matching(delta_rad_s, medium, geometry=None, chi_pr=None, chi_c=None, **quad):
    """Φ = sinc(ΔkL/2) exp(i(k_pr + k_c)L/2).

    Only the medium-induced part of the propagation phase is kept; the vacuum
    part (ω_pr + ω_c)L/2c = ω_p L/c is independent of δ and dropped.
    """
    d = _delta(delta_rad_s)
    g = _geometry(medium, geometry)
    if chi_pr is None:
        chi_pr = chi_probe(d, medium, g, **quad)
    if chi_c is None:
        chi_c = chi_conjugate(d, medium, g, **quad)
    half_l = 0.5 * medium.interaction_length_m
    dk = mismatch(d, medium, g, chi_pr, chi_c)
    w_pr = g.probe_center_rad_s + d
    w_c = g.conjugate_center_rad_s - d
    medium_phase = (w_pr * chi_pr + w_c * chi_c) / (2.0 * sc.c) * half_l
    return csinc(dk * half_l) * np.exp(1j * medium_phase)
