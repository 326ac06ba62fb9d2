"""Atomic medium, field geometry and parasitic-channel parameters (SI, angular units)."""
import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources

from scipy import constants as sc

from ..errors import SchemaError, ValidationError

TWO_PI = 2.0 * math.pi
RB85_MASS_KG = 84.911789738 * sc.atomic_mass
RB85_GROUND_SPLITTING_HZ = 3.04e9


def dipole_from_linewidth(natural_linewidth_rad_s, wavelength_m):
    """|mu0| from |mu0|^2 = 3 pi eps0 hbar c^3 Gamma / omega0^3."""
    w0 = TWO_PI * sc.c / wavelength_m
    return math.sqrt(3.0 * math.pi * sc.epsilon_0 * sc.hbar * sc.c**3 * natural_linewidth_rad_s / w0**3)


@dataclass(frozen=True)
class AtomicMedium:
    temperature_K: float
    number_density_per_m3: float
    pump_detuning_rad_s: float
    two_photon_detuning_rad_s: float
    excited_decay_rad_s: float
    ground_decoherence_rad_s: float
    pump_rabi_rad_s: float
    natural_linewidth_rad_s: float
    wavelength_m: float
    interaction_length_m: float
    atomic_mass_kg: float = RB85_MASS_KG
    reduced_dipole_C_m: float = 2.54e-29
    ground_splitting_rad_s: float = TWO_PI * RB85_GROUND_SPLITTING_HZ

    def __post_init__(self):
        positive = (
            "temperature_K", "number_density_per_m3", "excited_decay_rad_s",
            "ground_decoherence_rad_s", "natural_linewidth_rad_s", "wavelength_m",
            "interaction_length_m", "atomic_mass_kg", "reduced_dipole_C_m",
            "ground_splitting_rad_s",
        )
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be finite and > 0, got {value}")
        for name in ("pump_detuning_rad_s", "two_photon_detuning_rad_s", "pump_rabi_rad_s"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.pump_detuning_rad_s == 0:
            raise ValidationError("pump detuning must be non-zero (the conjugate and chi3 forms divide by it)")

    @classmethod
    def rb85_default(cls, derive_dipole=False):
        """Warm 85Rb D1 parameters: 92 C, 12.5 mm cell, Delta = 2pi*800 MHz, gamma = Gamma/2."""
        gamma_nat = TWO_PI * 5.75e6
        medium = cls(
            temperature_K=92.0 + 273.15,
            number_density_per_m3=6e18,
            pump_detuning_rad_s=TWO_PI * 800e6,
            two_photon_detuning_rad_s=TWO_PI * 4e6,
            excited_decay_rad_s=gamma_nat / 2.0,
            ground_decoherence_rad_s=TWO_PI * 100e3,
            pump_rabi_rad_s=TWO_PI * 100e6,
            natural_linewidth_rad_s=gamma_nat,
            wavelength_m=795e-9,
            interaction_length_m=12.5e-3,
        )
        return medium.with_derived_dipole() if derive_dipole else medium

    def with_derived_dipole(self):
        """Copy with mu0 computed from the natural linewidth and wavelength."""
        return self.replace(reduced_dipole_C_m=dipole_from_linewidth(self.natural_linewidth_rad_s, self.wavelength_m))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def resonance_rad_s(self):
        return TWO_PI * sc.c / self.wavelength_m

    @property
    def pump_field_V_m(self):
        """E_p from Omega_p = mu0 E_p / hbar."""
        return sc.hbar * abs(self.pump_rabi_rad_s) / self.reduced_dipole_C_m

    @property
    def most_probable_speed_m_s(self):
        return math.sqrt(2.0 * sc.k * self.temperature_K / self.atomic_mass_kg)

    @property
    def linear_prefactor(self):
        """N |mu0|^2 / (eps0 hbar), rad/s."""
        return self.number_density_per_m3 * self.reduced_dipole_C_m**2 / (sc.epsilon_0 * sc.hbar)


@dataclass(frozen=True)
class FieldGeometry:
    """Pump and line-centre probe/conjugate frequencies; collinear (angle 0) only."""

    pump_angular_freq_rad_s: float
    probe_center_rad_s: float
    conjugate_center_rad_s: float
    intersection_angle_rad: float = 0.0

    def __post_init__(self):
        wp, wpr, wc = self.pump_angular_freq_rad_s, self.probe_center_rad_s, self.conjugate_center_rad_s
        if abs(2.0 * wp - (wpr + wc)) > 4 * math.ulp(2.0 * wp):
            raise ValidationError("energy conservation 2*w_p = w_pr + w_c violated")
        if self.intersection_angle_rad != 0.0:
            raise ValidationError("only the collinear geometry (angle 0) is modelled")

    @classmethod
    def from_medium(cls, medium):
        """Pump at resonance + Delta; probe and conjugate one ground splitting below and above."""
        wp = medium.resonance_rad_s + medium.pump_detuning_rad_s
        split = medium.ground_splitting_rad_s
        wpr = wp - split
        return cls(wp, wpr, 2.0 * wp - wpr)


@dataclass(frozen=True)
class ParasiticChannel:
    """Raman-plus-spontaneous-emission false-partner channel, offset by ``time_offset_s``."""

    label: str
    time_offset_s: float
    weight: float = 1.0
    raman_detuning_rad_s: float = 0.0
    linewidth_rad_s: float = None

    def __post_init__(self):
        if not self.weight >= 0:
            raise ValidationError(f"channel {self.label}: weight must be >= 0")
        if self.linewidth_rad_s is not None and not self.linewidth_rad_s > 0:
            raise ValidationError(f"channel {self.label}: linewidth must be > 0")

    def linewidth(self, medium):
        return self.linewidth_rad_s if self.linewidth_rad_s is not None else medium.excited_decay_rad_s


def default_channels(weight_f2=1.0, weight_f3=1.0, offset_s=10.5e-9):
    """The F=2 / F=3 pair at +/- 10.5 ns."""
    return (
        ParasiticChannel("F=2", +offset_s, weight_f2),
        ParasiticChannel("F=3", -offset_s, weight_f3),
    )


# ---------------------------------------------------------------- parameter file

SCHEMA_VERSION = 1
REQUIRED_KEYS = (
    "temperature_C", "length_mm", "wavelength_nm", "Gamma_MHz", "Delta_MHz", "Delta32_MHz",
    "pump_power_mW", "beam_diameters_mm", "bin_ps", "window_ns", "gamma32_kHz", "N_per_m3",
    "Omega_p_MHz", "tau_F2_ns", "tau_F3_ns", "beta", "beta_F2", "beta_F3",
)
OPTIONAL_KEYS = {
    "schema_version": SCHEMA_VERSION,
    "acq_time_s": 1.0,
    "mu0_Cm": 2.54e-29,
    "mass_u": 84.911789738,
    "ground_splitting_GHz": 3.04,
    "grid_points": 2**14,
    "grid_span_GHz": 16.0,
}


@dataclass(frozen=True)
class ModelConfig:
    medium: AtomicMedium
    geometry: FieldGeometry
    channels: tuple
    beta: float
    bin_s: float
    window_s: tuple
    acq_time_s: float
    grid_points: int
    grid_span_rad_s: float
    metadata: dict


def _number(doc, key, path, positive=False, nonneg=False):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"{path}{key}", f"expected a finite number, got {value!r}")
    if positive and not value > 0:
        raise SchemaError(f"{path}{key}", f"must be > 0, got {value}")
    if nonneg and value < 0:
        raise SchemaError(f"{path}{key}", f"must be >= 0, got {value}")
    return float(value)


def load_params(source):
    """Validate a parameter document (dict, JSON text or path) and build the model config."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            with open(source, encoding="utf-8") as fh:
                doc = json.load(fh)
    if not isinstance(doc, dict):
        raise SchemaError("$", "parameter document must be a JSON object")
    p = "$."
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise SchemaError(f"{p}{key}", "required field missing")
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise SchemaError(f"{p}{unknown[0]}", "unknown field")
    doc = {**OPTIONAL_KEYS, **doc}
    if doc["schema_version"] != SCHEMA_VERSION:
        raise SchemaError(f"{p}schema_version", f"unsupported version {doc['schema_version']!r}")

    diam = doc["beam_diameters_mm"]
    if not (isinstance(diam, list) and len(diam) == 2 and all(isinstance(d, (int, float)) and d > 0 for d in diam)):
        raise SchemaError(f"{p}beam_diameters_mm", "expected [pump, probe] diameters > 0")

    num = lambda k, **kw: _number(doc, k, p, **kw)
    gamma_nat = TWO_PI * num("Gamma_MHz", positive=True) * 1e6
    try:
        medium = AtomicMedium(
            temperature_K=num("temperature_C") + 273.15,
            number_density_per_m3=num("N_per_m3", positive=True),
            pump_detuning_rad_s=TWO_PI * num("Delta_MHz") * 1e6,
            two_photon_detuning_rad_s=TWO_PI * num("Delta32_MHz") * 1e6,
            excited_decay_rad_s=gamma_nat / 2.0,
            ground_decoherence_rad_s=TWO_PI * num("gamma32_kHz", positive=True) * 1e3,
            pump_rabi_rad_s=TWO_PI * num("Omega_p_MHz") * 1e6,
            natural_linewidth_rad_s=gamma_nat,
            wavelength_m=num("wavelength_nm", positive=True) * 1e-9,
            interaction_length_m=num("length_mm", positive=True) * 1e-3,
            atomic_mass_kg=num("mass_u", positive=True) * sc.atomic_mass,
            reduced_dipole_C_m=num("mu0_Cm", positive=True),
            ground_splitting_rad_s=TWO_PI * num("ground_splitting_GHz", positive=True) * 1e9,
        )
    except SchemaError:
        raise
    except ValidationError as exc:
        raise SchemaError("$", str(exc)) from None

    bin_s = num("bin_ps", positive=True) * 1e-12
    half = num("window_ns", positive=True) * 1e-9
    channels = (
        ParasiticChannel("F=2", num("tau_F2_ns") * 1e-9, num("beta_F2", nonneg=True)),
        ParasiticChannel("F=3", num("tau_F3_ns") * 1e-9, num("beta_F3", nonneg=True)),
    )
    npts = doc["grid_points"]
    if not (isinstance(npts, int) and npts >= 2 and npts & (npts - 1) == 0):
        raise SchemaError(f"{p}grid_points", "must be a power of two >= 2")
    return ModelConfig(
        medium=medium,
        geometry=FieldGeometry.from_medium(medium),
        channels=channels,
        beta=num("beta", nonneg=True),
        bin_s=bin_s,
        window_s=(-half, half),
        acq_time_s=num("acq_time_s", positive=True),
        grid_points=npts,
        grid_span_rad_s=TWO_PI * num("grid_span_GHz", positive=True) * 1e9,
        metadata={"pump_power_mW": num("pump_power_mW", nonneg=True), "beam_diameters_mm": list(diam)},
    )


def default_params():
    """The bundled default parameter document as a dict."""
    text = resources.files("twinbeam").joinpath("data/rb85_default.json").read_text(encoding="utf-8")
    return json.loads(text)
