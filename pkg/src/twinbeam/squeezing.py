"""Intensity-difference noise spectra of twin beams, referenced to shot noise.

Photocurrents are represented by photon counts per sample interval from ideal
shot-noise-limited detectors. A twin-beam trace draws a Poisson pair number per
sample and thins it independently onto each channel, so the broadband
difference-noise ratio is 1 - 2*eta1*eta2/(eta1 + eta2). The shot-noise
reference is the difference of two independent Poisson channels carrying the
same total mean rate.
"""
import json
import logging
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.ndimage import uniform_filter1d

from .errors import CalibrationError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_RBW_HZ = 10e3
DEFAULT_VBW_HZ = 300.0
DB_FLOOR = -60.0
RATE_TOLERANCE = 0.01


@dataclass(frozen=True)
class IntensityTrace:
    sample_rate_hz: float
    n1: np.ndarray
    n2: np.ndarray

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ValidationError("sample rate must be positive")
        if np.shape(self.n1) != np.shape(self.n2) or np.ndim(self.n1) != 1:
            raise ValidationError("channels must be 1-D and of equal length")

    @property
    def duration_s(self):
        return self.n1.size / self.sample_rate_hz

    @property
    def total_rate_per_s(self):
        return (self.n1.sum() + self.n2.sum()) / self.duration_s


@dataclass(frozen=True)
class NoiseSpectrum:
    frequencies_hz: np.ndarray
    power_db_rel_snl: np.ndarray
    rbw_hz: float
    vbw_hz: float = None
    segment_length: int = 0

    def band_average_db(self, f_lo=None, f_hi=None):
        """dB of the mean linear ratio over [f_lo, f_hi] (DC excluded)."""
        f = self.frequencies_hz
        sel = f > 0
        if f_lo is not None:
            sel &= f >= f_lo
        if f_hi is not None:
            sel &= f <= f_hi
        lin = 10.0 ** (self.power_db_rel_snl[sel] / 10.0)
        return to_db(lin.mean())

    def to_csv(self, fh):
        fh.write("freq_hz,db_rel_snl\n")
        for f, p in zip(self.frequencies_hz.tolist(), self.power_db_rel_snl.tolist()):
            fh.write(f"{f:.6f},{p:.6f}\n")


def to_db(ratio):
    with np.errstate(divide="ignore"):
        return np.maximum(10.0 * np.log10(ratio), DB_FLOOR)


def expected_ratio(eta1, eta2):
    """Difference noise of pair thinning relative to the shot-noise level (linear)."""
    if eta1 + eta2 == 0:
        return 1.0
    return 1.0 - 2.0 * eta1 * eta2 / (eta1 + eta2)


def efficiency_for_db(db_below_snl):
    """Balanced efficiency eta giving ``db_below_snl`` dB of squeezing: 1 - 10**(-dB/10)."""
    return 1.0 - 10.0 ** (-db_below_snl / 10.0)


def simulate_twin_traces(pair_rate, eta1, eta2, sample_rate, duration, seed=0):
    """Pair counts Poisson per sample, each channel a Bernoulli(eta_i) thinning of them."""
    for eta in (eta1, eta2):
        if not 0.0 <= eta <= 1.0:
            raise ValidationError("efficiencies must lie in [0, 1]")
    if pair_rate < 0:
        raise ValidationError("pair rate must be >= 0")
    n = int(round(duration * sample_rate))
    if n < 2:
        raise ValidationError("trace needs at least two samples")
    rng = np.random.default_rng(seed)
    pairs = rng.poisson(pair_rate / sample_rate, n)
    n1 = rng.binomial(pairs, eta1)
    n2 = rng.binomial(pairs, eta2)
    return IntensityTrace(float(sample_rate), n1, n2)


def shot_noise_trace(total_rate, sample_rate, duration, seed=0):
    """Coherent reference: two independent Poisson channels at half the total rate each."""
    n = int(round(duration * sample_rate))
    rng = np.random.default_rng(seed)
    lam = total_rate / 2.0 / sample_rate
    return IntensityTrace(float(sample_rate), rng.poisson(lam, n), rng.poisson(lam, n))


def thermal_traces(mean_rate, sample_rate, duration, seed=0, correlation_samples=16):
    """Two independent channels with exponentially distributed, slowly varying intensity."""
    n = int(round(duration * sample_rate))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        m = -(-n // correlation_samples)
        intensity = np.repeat(rng.exponential(1.0, m), correlation_samples)[:n]
        out.append(rng.poisson(intensity * mean_rate / sample_rate))
    return IntensityTrace(float(sample_rate), out[0], out[1])


def segment_length(sample_rate, rbw_hz):
    """sample_rate / rbw rounded to the nearest power of two."""
    if not rbw_hz > 0:
        raise ValidationError("RBW must be positive")
    n = sample_rate / rbw_hz
    if n < 2:
        raise ValidationError("RBW too wide for the sample rate")
    return int(2 ** round(np.log2(n)))


def difference_psd(trace, nperseg):
    """One-sided averaged periodogram of n1 - n2.

    The global mean is removed once, no per-segment detrending, boxcar window,
    no overlap, and the trace is cut to whole segments. Under these choices the
    PSD integrates exactly to the variance of the retained samples.
    """
    d = (trace.n1 - trace.n2).astype(float)
    usable = (d.size // nperseg) * nperseg
    if usable == 0:
        raise ValidationError("trace shorter than one analysis segment")
    d = d[:usable] - d[:usable].mean()
    f, p = signal.welch(d, fs=trace.sample_rate_hz, window="boxcar", nperseg=nperseg,
                        noverlap=0, detrend=False, scaling="density", return_onesided=True)
    return f, p


def difference_noise_spectrum(trace, snl_trace, rbw_hz=DEFAULT_RBW_HZ, vbw_hz=None):
    """Difference-noise PSD of ``trace`` over that of ``snl_trace``, in dB.

    The reference must carry the same total mean rate within 1%. ``vbw_hz``
    applies a moving average across round(rbw/vbw) frequency bins.
    """
    if trace.sample_rate_hz != snl_trace.sample_rate_hz:
        raise CalibrationError("trace and shot-noise reference sample rates differ")
    r, r0 = trace.total_rate_per_s, snl_trace.total_rate_per_s
    if not r0 > 0 or abs(r - r0) / r0 > RATE_TOLERANCE:
        raise CalibrationError(
            f"shot-noise reference rate {r0:.6g}/s differs from trace rate {r:.6g}/s by more than 1%"
        )
    nper = segment_length(trace.sample_rate_hz, rbw_hz)
    f, p = difference_psd(trace, nper)
    _, p0 = difference_psd(snl_trace, nper)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(p0 > 0, p / p0, 0.0)
    if vbw_hz:
        width = max(1, int(round(rbw_hz / vbw_hz)))
        ratio = uniform_filter1d(ratio, width, mode="nearest")
    return NoiseSpectrum(f, to_db(ratio), float(rbw_hz), vbw_hz, nper)


def read_trace(csv_path, header_path=None):
    """Load an ``n1,n2`` CSV with its JSON sidecar declaring ``sample_rate_hz``."""
    header_path = header_path or str(csv_path) + ".json"
    with open(header_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    if "sample_rate_hz" not in meta:
        raise ValidationError(f"{header_path}: missing sample_rate_hz")
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return IntensityTrace(float(meta["sample_rate_hz"]), data[:, 0], data[:, 1])


def write_trace(csv_path, trace):
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("n1,n2\n")
        fh.write("".join(f"{a},{b}\n" for a, b in zip(trace.n1.tolist(), trace.n2.tolist())))
    with open(str(csv_path) + ".json", "w", encoding="utf-8") as fh:
        json.dump({"schema_version": 1, "sample_rate_hz": trace.sample_rate_hz,
                   "n_samples": int(trace.n1.size)}, fh, indent=2)
