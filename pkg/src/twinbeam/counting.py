"""Binned photon-counting statistics: Mandel Q with bin-bootstrap errors.

Q = (Var(n) - <n>) / <n> with the population (1/N) variance. Bootstrap
replicates resample bins with replacement. Because Q depends only on the
histogram of count values, a replicate is drawn as one multinomial sample over
the distinct count values, which has exactly the distribution of resampling
the bins themselves but costs O(max count) instead of O(n_bins).

Random numbers come from NumPy's PCG64 generator. Replicates are grouped in
fixed blocks of ``BOOTSTRAP_BLOCK`` iterations, block ``b`` seeded by child
``b`` of ``SeedSequence(seed)``, so results do not depend on the worker count.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ValidationError
from .parallel import resolve_threads, run_chunks

log = logging.getLogger(__name__)

BOOTSTRAP_BLOCK = 1000


class BinWidthWarning(UserWarning):
    """Bin width outside the dead-time / inter-arrival guard band."""


@dataclass(frozen=True)
class BinnedCounts:
    bin_width_ps: int
    counts: np.ndarray

    @property
    def n_bins(self):
        return self.counts.size

    @property
    def total_events(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class MandelResult:
    q_value: float
    q_std: float
    mean_count: float
    variance: float
    n_bins: int
    n_iterations: int
    bin_width_ps: int = 0
    seed: int = None

    def to_dict(self):
        return {
            "bin_width_ns": self.bin_width_ps / 1000.0,
            "q": self.q_value,
            "q_std": self.q_std,
            "mean": self.mean_count,
            "var": self.variance,
            "n_bins": self.n_bins,
            "iterations": self.n_iterations,
            "seed": self.seed,
        }


def bin_counts(stream, bin_width_ps, dead_time_ps=None, backend=None):
    """Count events in contiguous bins [i*w, (i+1)*w); the trailing partial bin is dropped.

    With ``dead_time_ps`` given, a :class:`BinWidthWarning` is issued when the
    bin is shorter than the dead time or longer than the mean inter-arrival time.
    """
    w = int(bin_width_ps)
    if w <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_width_ps}")
    n_bins = stream.duration_ps // w
    if n_bins < 1:
        raise ValidationError(
            f"acquisition of {stream.duration_ps} ps holds no complete {w} ps bin"
        )
    if dead_time_ps is not None:
        _guard_bin_width(stream, w, int(dead_time_ps))
    counts = np.zeros(n_bins, dtype=np.int64)
    _backend.get(backend).bin_counts(stream.timestamps, w, n_bins, counts)
    return BinnedCounts(w, counts)


def _guard_bin_width(stream, w, dead):
    if w < dead:
        warnings.warn(f"bin width {w} ps is shorter than the dead time {dead} ps", BinWidthWarning)
    if len(stream):
        mean_gap = stream.duration_ps / len(stream)
        if w > mean_gap:
            warnings.warn(
                f"bin width {w} ps exceeds the mean inter-arrival time {mean_gap:.0f} ps",
                BinWidthWarning,
            )


def _moments(values, weights, n):
    mean = values @ weights / n
    var = (values * values) @ weights / n - mean * mean
    return mean, np.maximum(var, 0.0)


def mandel_q(binned):
    """Mandel Q of a count vector (population variance); ``q_std`` is 0 here."""
    counts = binned.counts if isinstance(binned, BinnedCounts) else np.asarray(binned)
    width = binned.bin_width_ps if isinstance(binned, BinnedCounts) else 0
    if counts.size == 0:
        raise ValidationError("no bins")
    mean = float(counts.mean())
    if mean <= 0:
        raise ValidationError("Q is undefined for all-zero counts")
    hist = np.bincount(counts.astype(np.int64)).astype(float)
    values = np.arange(hist.size, dtype=float)
    m, var = _moments(values, hist, counts.size)
    var = float(var)
    return MandelResult((var - m) / m, 0.0, float(m), var, int(counts.size), 0, width)


def bootstrap_q(binned, iterations=10_000, seed=0, threads=None):
    """Q with its bootstrap standard deviation over ``iterations`` bin resamples."""
    if iterations < 1:
        raise ValidationError("iterations must be >= 1")
    base = mandel_q(binned)
    counts = binned.counts if isinstance(binned, BinnedCounts) else np.asarray(binned)
    if counts.size < 2:
        raise ValidationError("bootstrap needs at least two bins")
    hist = np.bincount(counts.astype(np.int64))
    support = np.flatnonzero(hist)
    values = support.astype(float)
    p = hist[support] / counts.size
    n = counts.size

    blocks = [(b * BOOTSTRAP_BLOCK, min(iterations, (b + 1) * BOOTSTRAP_BLOCK))
              for b in range(-(-iterations // BOOTSTRAP_BLOCK))]
    children = np.random.SeedSequence(seed).spawn(len(blocks))

    def block(start, stop):
        b = start // BOOTSTRAP_BLOCK
        rng = np.random.Generator(np.random.PCG64(children[b]))
        draws = rng.multinomial(n, p, size=stop - start).astype(float)
        mean = draws @ values / n
        var = draws @ (values * values) / n - mean * mean
        with np.errstate(divide="ignore", invalid="ignore"):
            return (np.maximum(var, 0.0) - mean) / mean

    q = np.concatenate(run_chunks(block, blocks, resolve_threads(threads)))
    q = q[np.isfinite(q)]
    q_std = float(np.std(q, ddof=1)) if q.size > 1 else 0.0
    return MandelResult(base.q_value, q_std, base.mean_count, base.variance, base.n_bins,
                        int(iterations), base.bin_width_ps, seed)


def bin_width_sweep(stream, widths_ps, iterations=10_000, seed=0, threads=None, dead_time_ps=None):
    """One bootstrapped :class:`MandelResult` per bin width, in input order."""
    out = []
    for w in widths_ps:
        binned = bin_counts(stream, int(w), dead_time_ps=dead_time_ps)
        out.append((int(w), bootstrap_q(binned, iterations, seed, threads)))
    return out


def parse_sweep(spec):
    """'50:500:50' (ns, inclusive stop) -> [50000, 100000, ...] in ps."""
    parts = [float(x) for x in spec.split(":")]
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise ValidationError(f"sweep must be start:stop:step with step > 0, got {spec!r}")
    start, stop, step = parts
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [int(round((start + i * step) * 1000)) for i in range(n)]
