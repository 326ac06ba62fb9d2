"""Synthetic two-channel time-tag sources with known statistics, plus a detector model.

Source kinds
    coherent       two independent Poisson streams at ``pair_rate_per_s`` each
    twin_pairs     Poisson pair epochs; probe at the epoch, conjugate at epoch - tau
    renewal_pairs  as twin_pairs but epochs form a gamma(k) renewal process whose
                   counting statistics tend to Q = 1/k - 1 for long bins
    spdc_like      twin_pairs with a narrow Gaussian delay profile

tau follows the histogram convention t_probe - t_conjugate. All randomness is
drawn from one PCG64 generator seeded by ``seed``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ValidationError
from .timetags import CONJUGATE, PROBE, TimeTagStream, apply_dead_time

PS = 1e12
KINDS = ("coherent", "twin_pairs", "renewal_pairs", "spdc_like")


class DelayProfile:
    """Distribution of tau = t_probe - t_conjugate, sampled by inverse CDF.

    Build one with the ``delta``/``gaussian``/``uniform``/``laplace``
    constructors or from a tabulated density (``from_table``), e.g. a model
    coincidence profile. Tabulated densities are treated as piecewise constant
    on cells centred at the grid points, with linear CDF interpolation inside
    each cell, and are normalized to unit integral before sampling.
    """

    def __init__(self, name, params=None, tau_ps=None, density=None):
        self.name = name
        self.params = dict(params or {})
        self._tau = None
        self._cdf = None
        if tau_ps is not None:
            tau = np.asarray(tau_ps, dtype=float)
            dens = np.asarray(density, dtype=float)
            if tau.ndim != 1 or tau.size < 2 or tau.shape != dens.shape:
                raise ValidationError("tabulated profile needs matching 1-D tau and density arrays")
            if np.any(np.diff(tau) <= 0):
                raise ValidationError("profile tau grid must be strictly increasing")
            if not np.all(np.isfinite(dens)) or np.any(dens < 0):
                raise ValidationError("profile density must be finite and non-negative")
            mid = 0.5 * (tau[1:] + tau[:-1])
            edges = np.concatenate([[tau[0] - (mid[0] - tau[0])], mid, [tau[-1] + (tau[-1] - mid[-1])]])
            mass = dens * np.diff(edges)
            total = mass.sum()
            if not total > 0:
                raise ValidationError("profile cannot be normalized: zero total weight")
            self._tau = edges
            self._cdf = np.concatenate([[0.0], np.cumsum(mass) / total])

    @classmethod
    def delta(cls, offset_ps=0.0):
        return cls("delta", {"offset_ps": float(offset_ps)})

    @classmethod
    def gaussian(cls, sigma_ps, center_ps=0.0):
        if sigma_ps < 0:
            raise ValidationError("sigma must be non-negative")
        return cls("gaussian", {"sigma_ps": float(sigma_ps), "center_ps": float(center_ps)})

    @classmethod
    def uniform(cls, half_width_ps, center_ps=0.0):
        return cls("uniform", {"half_width_ps": float(half_width_ps), "center_ps": float(center_ps)})

    @classmethod
    def laplace(cls, decay_ps, center_ps=0.0):
        return cls("laplace", {"decay_ps": float(decay_ps), "center_ps": float(center_ps)})

    @classmethod
    def from_table(cls, tau_ps, density, name="table"):
        return cls(name, None, tau_ps, density)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        shape = d.pop("shape", None)
        if shape == "table":
            return cls.from_table(d["tau_ps"], d["density"])
        ctor = {"delta": cls.delta, "gaussian": cls.gaussian,
                "uniform": cls.uniform, "laplace": cls.laplace}.get(shape)
        if ctor is None:
            raise ValidationError(f"unknown profile shape {shape!r}")
        try:
            return ctor(**d)
        except TypeError as exc:
            raise ValidationError(f"bad parameters for {shape} profile: {exc}") from None

    def describe(self):
        return {"shape": self.name, **self.params}

    def sample(self, rng, n):
        """Draw ``n`` delays in picoseconds (float)."""
        p = self.params
        if self._cdf is not None:
            return np.interp(rng.random(n), self._cdf, self._tau)
        if self.name == "delta":
            return np.full(n, p["offset_ps"])
        if self.name == "gaussian":
            return p["center_ps"] + p["sigma_ps"] * rng.standard_normal(n)
        if self.name == "uniform":
            return p["center_ps"] + p["half_width_ps"] * (2.0 * rng.random(n) - 1.0)
        if self.name == "laplace":
            return p["center_ps"] + rng.laplace(0.0, p["decay_ps"], n)
        raise ValidationError(f"cannot sample profile {self.name!r}")


@dataclass(frozen=True)
class SourceSpec:
    kind: str
    pair_rate_per_s: float
    delay_profile: DelayProfile = field(default_factory=DelayProfile.delta)
    background_rate_per_s: tuple = (0.0, 0.0)
    renewal_shape: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown source kind {self.kind!r}; expected one of {KINDS}")
        if not self.pair_rate_per_s >= 0:
            raise ValidationError("pair rate must be >= 0")
        bg = tuple(float(b) for b in self.background_rate_per_s)
        if len(bg) != 2 or min(bg) < 0:
            raise ValidationError("background rates must be two values >= 0")
        object.__setattr__(self, "background_rate_per_s", bg)
        if not self.renewal_shape >= 1:
            raise ValidationError(f"renewal shape k must be >= 1, got {self.renewal_shape}")


@dataclass(frozen=True)
class DetectorSpec:
    efficiency: float = 1.0
    dead_time_ps: int = 0
    gaussian_jitter_ps: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValidationError("efficiency must lie in [0, 1]")
        if self.dead_time_ps < 0 or self.gaussian_jitter_ps < 0:
            raise ValidationError("dead time and jitter must be >= 0")


def renewal_q(k, rate_per_s, bin_width_s):
    """Two-term large-bin Mandel Q of a stationary gamma(k) renewal process.

    Var N(t) = rate*t/k + (1 - 1/k**2)/6 + o(1), so
    Q = 1/k - 1 + (1 - 1/k**2) / (6 * rate * t).
    """
    x = rate_per_s * bin_width_s
    return 1.0 / k - 1.0 + (1.0 - 1.0 / k**2) / (6.0 * x)


def renewal_shape_for_q(q_target, rate_per_s, bin_width_s):
    """Gamma shape k whose renewal counts give ``q_target`` at the given bin width."""
    if not -1.0 < q_target <= 0.0:
        raise ValidationError("renewal processes reach -1 < Q <= 0 only")
    f = lambda k: renewal_q(k, rate_per_s, bin_width_s) - q_target
    if f(1.0) < 0:
        raise ValidationError("target Q is below what k=1 gives at this bin width")
    if f(1e6) > 0:
        raise ValidationError("target Q unreachable at this rate and bin width")
    return brentq(f, 1.0, 1e6, xtol=1e-12)


def _poisson_times(rng, rate, duration_ps):
    n = rng.poisson(rate * duration_ps / PS)
    return np.sort(rng.random(n) * duration_ps)


def _renewal_times(rng, rate, k, duration_ps):
    mean_gap = PS / rate
    # start well before 0 so the kept part is stationary
    t = -50.0 * mean_gap
    chunks = []
    batch = int(rate * duration_ps / PS * 1.05) + 1024
    while t < duration_ps:
        gaps = rng.gamma(k, mean_gap / k, batch)
        times = t + np.cumsum(gaps)
        t = times[-1]
        chunks.append(times)
    times = np.concatenate(chunks)
    return times[(times >= 0) & (times < duration_ps)]


def generate(source, duration_s, seed=0):
    """Generate (probe, conjugate, truth) for ``source`` over ``duration_s`` seconds."""
    if not duration_s > 0:
        raise ValidationError("duration must be positive")
    rng = np.random.default_rng(seed)
    T = float(duration_s) * PS
    r = float(source.pair_rate_per_s)
    truth = {
        "kind": source.kind,
        "pair_rate_per_s": r,
        "duration_s": float(duration_s),
        "seed": seed,
        "background_rate_per_s": list(source.background_rate_per_s),
        "delay_profile": source.delay_profile.describe(),
        "generator": "numpy PCG64",
    }

    if source.kind == "coherent":
        probe = _poisson_times(rng, r, T)
        conj = _poisson_times(rng, r, T)
        truth["expected_q"] = 0.0
    else:
        if source.kind == "renewal_pairs" and r > 0:
            epochs = _renewal_times(rng, r, source.renewal_shape, T)
            truth["renewal_shape"] = float(source.renewal_shape)
            truth["expected_q_asymptotic"] = 1.0 / source.renewal_shape - 1.0
        else:
            epochs = _poisson_times(rng, r, T)
            truth["expected_q"] = 0.0
        profile = source.delay_profile
        if source.kind == "spdc_like" and profile.name == "delta":
            profile = DelayProfile.gaussian(500.0)
            truth["delay_profile"] = profile.describe()
        probe = epochs
        conj = epochs - profile.sample(rng, epochs.size)
        truth["n_pairs"] = int(epochs.size)

    bg_p, bg_c = source.background_rate_per_s
    if bg_p:
        probe = np.concatenate([probe, _poisson_times(rng, bg_p, T)])
    if bg_c:
        conj = np.concatenate([conj, _poisson_times(rng, bg_c, T)])

    probe = np.sort(np.rint(probe)).astype(np.int64)
    conj = np.sort(np.rint(conj)).astype(np.int64)
    lowest = min(probe[0] if probe.size else 0, conj[0] if conj.size else 0)
    shift = int(-lowest) if lowest < 0 else 0
    probe += shift
    conj += shift
    truth["time_shift_ps"] = shift
    duration_ps = int(round(T)) + shift
    duration_ps = max(duration_ps, int(probe[-1]) if probe.size else 0, int(conj[-1]) if conj.size else 0)
    truth["duration_ps"] = duration_ps
    truth["n_probe"] = int(probe.size)
    truth["n_conjugate"] = int(conj.size)
    return (TimeTagStream(PROBE, probe, duration_ps),
            TimeTagStream(CONJUGATE, conj, duration_ps),
            truth)


def detect(stream, detector, seed=0):
    """Apply detector losses in a fixed order: Bernoulli thinning, jitter, re-sort, dead time."""
    rng = np.random.default_rng(seed)
    t = stream.timestamps
    if detector.efficiency < 1.0:
        t = t[rng.random(t.size) < detector.efficiency]
    if detector.gaussian_jitter_ps > 0 and t.size:
        t = t + np.rint(rng.normal(0.0, detector.gaussian_jitter_ps, t.size)).astype(np.int64)
        t = np.clip(np.sort(t), 0, stream.duration_ps)
    out = TimeTagStream(stream.channel, t, stream.duration_ps)
    return apply_dead_time(out, detector.dead_time_ps)
