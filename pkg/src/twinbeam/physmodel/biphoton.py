"""Biphoton temporal amplitude, parasitic-channel densities and the composite C(τ).

Delay convention: τ = t_probe - t_conjugate, the same as the coincidence
histograms. A spectral amplitude S(δ) on the probe-detuning grid maps to

    ψ(τ) = (dδ / 2π) Σ_k S(δ_k) exp(+i δ_k τ),

evaluated for all τ at once with an inverse FFT on the dual grid
τ_m = (m - n/2) · 2π/span.

Densities are normalized to unit integral over the τ grid before weighting,
so β and β_j carry the absolute scale (coincidences per second of exposure)
and only the shapes are predictions.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import nnls
from scipy.signal import find_peaks

from ..errors import ConvergenceError, ValidationError
from .medium import TWO_PI, FieldGeometry
from .optics import chi3, chi_conjugate, chi_parasitic, chi_probe, phase_matching

DEFAULT_POINTS = 2**14
DEFAULT_SPAN_RAD_S = TWO_PI * 16e9
EDGE_TOLERANCE = 1e-4
EDGE_POINTS = 4
DFT_CHECK_POINTS = 64
DFT_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform probe-detuning grid δ_k = (k - n/2)·span/n, centred on δ = 0."""

    span_rad_s: float = DEFAULT_SPAN_RAD_S
    n_points: int = DEFAULT_POINTS
    center_detuning_rad_s: float = 0.0

    def __post_init__(self):
        n = self.n_points
        if not (isinstance(n, (int, np.integer)) and n >= 2 and n & (n - 1) == 0):
            raise ValidationError(f"n_points must be a power of two >= 2, got {n}")
        if not (math.isfinite(self.span_rad_s) and self.span_rad_s > 0):
            raise ValidationError("span must be finite and > 0")
        if self.center_detuning_rad_s != 0.0:
            raise ValidationError("the grid is always centred on zero detuning")

    @property
    def step_rad_s(self):
        return self.span_rad_s / self.n_points

    @property
    def detunings_rad_s(self):
        return (np.arange(self.n_points) - self.n_points // 2) * self.step_rad_s

    @property
    def tau_step_s(self):
        return TWO_PI / self.span_rad_s

    @property
    def tau_s(self):
        return (np.arange(self.n_points) - self.n_points // 2) * self.tau_step_s


@dataclass(frozen=True)
class TemporalAmplitude:
    """Complex amplitude (``kind="amplitude"``) or real density on the dual τ grid."""

    tau_step_s: float
    tau_s: np.ndarray
    values: np.ndarray
    kind: str = "amplitude"
    label: str = ""

    def __post_init__(self):
        if self.kind not in ("amplitude", "density"):
            raise ValidationError(f"unknown kind {self.kind!r}")

    def density(self):
        if self.kind == "density":
            return np.asarray(self.values, dtype=float)
        return np.abs(self.values) ** 2

    def integral(self):
        return float(self.density().sum() * self.tau_step_s)

    def peak_tau_s(self):
        return float(self.tau_s[np.argmax(self.density())])

    def fwhm_s(self):
        return _fwhm(self.tau_s, self.density())


def _fwhm(tau, y):
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    left = i
    while left > 0 and y[left - 1] >= half:
        left -= 1
    right = i
    while right < y.size - 1 and y[right + 1] >= half:
        right += 1

    def cross(a, b):
        if y[a] == y[b]:
            return tau[a]
        return tau[a] + (half - y[a]) * (tau[b] - tau[a]) / (y[b] - y[a])

    lo = cross(left - 1, left) if left > 0 else tau[0]
    hi = cross(right, right + 1) if right < y.size - 1 else tau[-1]
    return float(hi - lo)


def direct_dft(grid, spectrum, tau_s):
    """ψ(τ) by explicit summation; the oracle for :func:`spectrum_to_time`."""
    d = grid.detunings_rad_s
    tau = np.atleast_1d(np.asarray(tau_s, dtype=float))
    phase = np.exp(1j * np.outer(tau, d))
    return grid.step_rad_s / TWO_PI * (phase @ np.asarray(spectrum, dtype=complex))


def spectrum_to_time(grid, spectrum, edge_tolerance=EDGE_TOLERANCE, check=True, label=""):
    """Fourier transform a spectral amplitude on ``grid`` to ψ(τ).

    ``edge_tolerance`` (None to skip) bounds the outermost grid magnitudes
    relative to the peak; ``check`` compares 64 τ samples against the direct sum.
    """
    s = np.asarray(spectrum, dtype=complex)
    n = grid.n_points
    if s.shape != (n,):
        raise ValidationError(f"spectrum must have shape ({n},)")
    mag = np.abs(s)
    peak = mag.max()
    if not np.isfinite(peak):
        raise ConvergenceError("spectrum is not finite")
    if edge_tolerance is not None and peak > 0:
        edge = max(mag[:EDGE_POINTS].max(), mag[-EDGE_POINTS:].max())
        if edge > edge_tolerance * peak:
            raise ConvergenceError(
                f"spectrum at the grid edge is {edge / peak:.2e} of its peak "
                f"(limit {edge_tolerance:.0e}); widen the grid span"
            )
    psi = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(s))) * (n * grid.step_rad_s / TWO_PI)
    tau = grid.tau_s
    if check and peak > 0:
        idx = np.unique(np.linspace(0, n - 1, min(DFT_CHECK_POINTS, n)).round().astype(int))
        ref = direct_dft(grid, s, tau[idx])
        scale = np.abs(psi).max()
        err = np.abs(psi[idx] - ref).max() / scale
        if err > DFT_TOLERANCE:
            raise ConvergenceError(f"FFT disagrees with the direct transform: {err:.2e}")
    return TemporalAmplitude(grid.tau_step_s, tau, psi, "amplitude", label)


def biphoton_spectrum(grid, medium, geometry=None, **quad):
    """κ(δ)Φ(δ) with κ = χ⁽³⁾ E_p²."""
    geometry = geometry or FieldGeometry.from_medium(medium)
    d = grid.detunings_rad_s
    chi_pr = chi_probe(d, medium, geometry, **quad)
    chi_c = chi_conjugate(d, medium, geometry, **quad)
    kappa = chi3(d, medium, geometry, **quad) * medium.pump_field_V_m**2
    return kappa * phase_matching(d, medium, geometry, chi_pr, chi_c)


def biphoton_psi(grid, medium, geometry=None, check=True, **quad):
    """Biphoton temporal amplitude ψ(τ) of the SFWM process."""
    return spectrum_to_time(grid, biphoton_spectrum(grid, medium, geometry, **quad),
                            check=check, label="sfwm")


def parasitic_spectrum(channel, grid, medium, **quad):
    """S_j(δ) = E_p Im χ_j(δ) exp(-iδτ_j).

    The absorptive (emission) lineshape is real, so the channel density is an
    even function of τ - τ_j and the phase factor moves its peak to +τ_j.
    """
    d = grid.detunings_rad_s
    shape = medium.pump_field_V_m * chi_parasitic(d, channel, medium, **quad).imag
    return shape * np.exp(-1j * d * channel.time_offset_s)


def parasitic_density(channel, grid, medium, check=True, **quad):
    """p_j(τ) = |ψ_j(τ)|² for one parasitic channel."""
    spec = parasitic_spectrum(channel, grid, medium, **quad)
    psi = spectrum_to_time(grid, spec, check=check, label=channel.label)
    return TemporalAmplitude(psi.tau_step_s, psi.tau_s, np.abs(psi.values) ** 2, "density", channel.label)


# ---------------------------------------------------------------- composite profile


@dataclass(frozen=True)
class ModelProfile:
    """Predicted coincidences per delay bin with the per-process breakdown.

    ``components`` holds the unit-integral bin-averaged densities (1/s) of each
    process; ``counts = exposure * (β·sfwm + Σ β_j·channel_j)`` with
    exposure = Δt_bin · T.
    """

    edges_s: np.ndarray
    counts: np.ndarray
    components: dict
    weights: dict
    bin_s: float
    acq_time_s: float
    info: dict = field(default_factory=dict, compare=False)

    @property
    def centers_s(self):
        return 0.5 * (self.edges_s[1:] + self.edges_s[:-1])

    @property
    def exposure_s2(self):
        return self.bin_s * self.acq_time_s

    def to_csv(self, fh):
        fh.write("tau_ns,counts\n")
        for t, c in zip((self.centers_s * 1e9).tolist(), self.counts.tolist()):
            fh.write(f"{t:.6f},{c:.9e}\n")


def bin_average(tau_s, density, edges_s):
    """Mean of a sampled density over each [edge_i, edge_i+1), by trapezoid integration."""
    tau = np.asarray(tau_s, dtype=float)
    edges = np.asarray(edges_s, dtype=float)
    if edges[0] < tau[0] or edges[-1] > tau[-1]:
        raise ValidationError("histogram window extends beyond the model τ grid")
    cum = cumulative_trapezoid(density, tau, initial=0.0)
    return np.diff(np.interp(edges, tau, cum)) / np.diff(edges)


def histogram_edges(window_s, bin_s):
    lo, hi = window_s
    n = (hi - lo) / bin_s
    if not bin_s > 0 or not hi > lo or abs(n - round(n)) > 1e-9 * max(1.0, n):
        raise ValidationError("window width must be a positive multiple of the bin width")
    return lo + bin_s * np.arange(int(round(n)) + 1)


def _unit(amplitude):
    dens = amplitude.density()
    total = dens.sum() * amplitude.tau_step_s
    if not total > 0:
        raise ConvergenceError(f"{amplitude.label or 'density'} has zero weight")
    return dens / total


def coincidence_profile(medium, geometry=None, channels=(), beta=1.0, bin_s=250e-12,
                        acq_time_s=1.0, window_s=(-30e-9, 30e-9), grid=None, **quad):
    """Composite C(τ) = Δt T [β ρ_sfwm(τ) + Σ β_j ρ_j(τ)] on the requested bins."""
    if not beta >= 0 or any(not c.weight >= 0 for c in channels):
        raise ValidationError("weights β and β_j must be >= 0")
    if not acq_time_s > 0:
        raise ValidationError("acquisition time must be > 0")
    grid = grid or SpectralGrid()
    geometry = geometry or FieldGeometry.from_medium(medium)
    edges = histogram_edges(window_s, bin_s)

    components, weights, info = {}, {}, {}
    psi = biphoton_psi(grid, medium, geometry, **quad)
    components["sfwm"] = bin_average(psi.tau_s, _unit(psi), edges)
    weights["sfwm"] = float(beta)
    info["sfwm_fwhm_s"] = psi.fwhm_s()
    for ch in channels:
        if ch.label in components:
            raise ValidationError(f"duplicate channel label {ch.label!r}")
        p = parasitic_density(ch, grid, medium, **quad)
        components[ch.label] = bin_average(p.tau_s, _unit(p), edges)
        weights[ch.label] = float(ch.weight)
        info[f"{ch.label}_peak_s"] = p.peak_tau_s()

    exposure = bin_s * acq_time_s
    counts = exposure * sum(weights[k] * components[k] for k in components)
    return ModelProfile(edges, counts, components, weights, float(bin_s), float(acq_time_s), info)


def fit_amplitudes(profile, observed):
    """Non-negative least-squares weights (β, β_j) matching ``observed`` counts."""
    observed = np.asarray(observed, dtype=float)
    names = list(profile.components)
    design = np.stack([profile.exposure_s2 * profile.components[k] for k in names], axis=1)
    if observed.shape != (design.shape[0],):
        raise ValidationError("observed counts do not match the profile bins")
    coef, _ = nnls(design, observed)
    return dict(zip(names, coef.tolist()))


def fit_scale(model, observed):
    """Single amplitude s minimizing ||s·model - observed||; returns (s, relative RMS).

    The relative RMS is ||s·model - observed|| / ||observed||.
    """
    m = np.asarray(model, dtype=float)
    d = np.asarray(observed, dtype=float)
    if m.shape != d.shape:
        raise ValidationError("model and data lengths differ")
    mm = m @ m
    if not mm > 0 or not d @ d > 0:
        raise ValidationError("cannot fit a scale to an all-zero profile")
    s = (m @ d) / mm
    return float(s), float(np.linalg.norm(s * m - d) / np.linalg.norm(d))


def profile_summary(profile, prominence=0.01):
    """Peak position, central FWHM, plateau edges and side-feature positions, in ns.

    Plateau edges are the outermost local maxima of C(τ) whose prominence
    exceeds ``prominence`` times the maximum; None when there are none.
    """
    tau = profile.centers_s * 1e9
    c = profile.counts
    top = c.max()
    out = {
        "peak_tau_ns": float(tau[np.argmax(c)]) if top > 0 else None,
        "plateau_fwhm_ns": _fwhm(tau, c) if top > 0 else None,
        "plateau_edges_ns": None,
        "side_features_ns": {},
        "weights": dict(profile.weights),
    }
    if top > 0:
        peaks, _ = find_peaks(c, prominence=prominence * top)
        if peaks.size:
            out["plateau_edges_ns"] = [float(tau[peaks[0]]), float(tau[peaks[-1]])]
    for name, comp in profile.components.items():
        if name != "sfwm" and profile.weights[name] > 0:
            out["side_features_ns"][name] = float(tau[np.argmax(comp)])
    return out
