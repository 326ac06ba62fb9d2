"""Two-channel photon time-tag streams: I/O, coincidence histograms, dead time.

Timestamps are integer picoseconds end to end. Channel 0 is the probe,
channel 1 the conjugate. Delays follow tau = t_probe - t_conjugate.
"""
import io
import logging
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import (
    FORMAT_BAD_MAGIC,
    FORMAT_BAD_RECORD,
    FORMAT_TRUNCATED,
    FORMAT_UNSUPPORTED_VERSION,
    FormatError,
    ParseError,
    ValidationError,
)
from .parallel import chunk_bounds, resolve_threads, run_chunks

log = logging.getLogger(__name__)

PROBE = 0
CONJUGATE = 1
CSV_HEADER = "timestamp_ps,channel"

TTAG_MAGIC = b"TTAG"
TTAG_VERSION = 1
TTAG_HEADER = struct.Struct("<4sHHQ")
TTAG_RECORD = np.dtype([("timestamp_ps", "<u8"), ("channel", "u1"), ("pad", "u1", (3,))])

# kept below 2**63 so differences never overflow int64
MAX_TIMESTAMP_PS = np.iinfo(np.int64).max


@dataclass(frozen=True)
class TimeTagStream:
    channel: int
    timestamps: np.ndarray
    duration_ps: int
    out_of_order: int = 0

    def __post_init__(self):
        ts = np.ascontiguousarray(self.timestamps, dtype=np.int64)
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "duration_ps", int(self.duration_ps))
        if self.channel not in (PROBE, CONJUGATE):
            raise ValidationError(f"channel must be 0 or 1, got {self.channel}")
        if ts.size:
            if ts[0] < 0:
                raise ValidationError("timestamps must be non-negative")
            if np.any(np.diff(ts) < 0):
                raise ValidationError("timestamps must be non-decreasing")
            if ts[-1] > self.duration_ps:
                raise ValidationError(
                    f"timestamp {int(ts[-1])} exceeds acquisition duration {self.duration_ps}"
                )
        elif self.duration_ps < 0:
            raise ValidationError("duration must be non-negative")

    def __len__(self):
        return self.timestamps.size

    @property
    def rate_per_s(self):
        return len(self) / (self.duration_ps * 1e-12) if self.duration_ps else 0.0


@dataclass(frozen=True)
class CoincidenceHistogram:
    window_lo_ps: int
    window_hi_ps: int
    bin_width_ps: int
    counts: np.ndarray
    n_start_events: int = 0
    n_stop_events: int = 0
    mode: str = "all-pairs"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def n_bins(self):
        return self.counts.size

    @property
    def edges_ps(self):
        return self.window_lo_ps + self.bin_width_ps * np.arange(self.n_bins + 1, dtype=np.int64)

    @property
    def tau_ps(self):
        """Left bin edges; the delay labelling used in histogram CSV output."""
        return self.edges_ps[:-1]

    @property
    def centers_ps(self):
        return self.tau_ps + self.bin_width_ps / 2.0

    def to_csv(self, fh):
        fh.write("tau_ps,counts\n")
        for t, c in zip(self.tau_ps.tolist(), self.counts.tolist()):
            fh.write(f"{t},{c}\n")


def _split_channels(ts, ch, n_out_of_order=0):
    duration = int(ts.max()) if ts.size else 0
    streams = []
    for c in (PROBE, CONJUGATE):
        sel = ts[ch == c]
        if sel.size > 1 and np.any(sel[1:] < sel[:-1]):
            sel = np.sort(sel, kind="stable")
        streams.append(TimeTagStream(c, sel, duration, n_out_of_order))
    return streams[0], streams[1]


def _count_disorder(ts, ch):
    n = 0
    for c in (PROBE, CONJUGATE):
        sel = ts[ch == c]
        n += int(np.count_nonzero(sel[1:] < sel[:-1]))
    return n


def _parse_line(text, lineno):
    parts = text.split(",")
    if len(parts) != 2:
        raise ParseError(f"expected 'timestamp_ps,channel', got {text!r}", lineno)
    ts_s, ch_s = (p.strip() for p in parts)
    if not ts_s.isdigit():
        raise ParseError(f"non-numeric timestamp {ts_s!r}", lineno)
    if not ch_s.lstrip("-").isdigit():
        raise ParseError(f"non-numeric channel {ch_s!r}", lineno)
    ts = int(ts_s)
    ch = int(ch_s)
    if ts > MAX_TIMESTAMP_PS:
        raise ParseError(f"timestamp {ts} overflows the supported range", lineno)
    if ch not in (PROBE, CONJUGATE):
        raise ParseError(f"channel must be 0 or 1, got {ch}", lineno)
    return ts, ch


def parse_csv(reader):
    """Parse ``timestamp_ps,channel`` rows into (probe, conjugate) streams.

    Accepts a path, a text file object or a string of CSV content. The header
    line is optional. Out-of-order rows are sorted per channel and counted in
    ``out_of_order`` on both returned streams.
    """
    if isinstance(reader, (str, bytes)) and (not reader or "\n" in str(reader) or "," in str(reader)):
        text = reader.decode() if isinstance(reader, bytes) else reader
    elif hasattr(reader, "read"):
        text = reader.read()
        if isinstance(text, bytes):
            text = text.decode()
    else:
        with open(reader, "r", encoding="utf-8") as fh:
            text = fh.read()

    lines = text.splitlines()
    first = 0
    if lines and lines[0].strip().replace(" ", "") == CSV_HEADER:
        first = 1
    body = lines[first:]
    if not any(l.strip() for l in body):
        return _split_channels(np.empty(0, np.int64), np.empty(0, np.int64))

    try:
        with warnings.catch_warnings():
            # loadtxt falls back to float parsing (with a warning) for "1.5" or overflow
            warnings.simplefilter("error")
            arr = np.loadtxt(io.StringIO("\n".join(body)), delimiter=",", dtype=np.uint64, ndmin=2)
        if arr.shape[1] != 2:
            raise ValueError("column count")
        if np.any(arr[:, 0] > np.uint64(MAX_TIMESTAMP_PS)) or np.any(arr[:, 1] > 1):
            raise ValueError("range")
        ts = arr[:, 0].astype(np.int64)
        ch = arr[:, 1].astype(np.int64)
    except (ValueError, OverflowError, Warning):
        # slow path pins down the first bad line
        ts_l, ch_l = [], []
        for i, line in enumerate(lines[first:], start=first + 1):
            if not line.strip():
                continue
            t, c = _parse_line(line, i)
            ts_l.append(t)
            ch_l.append(c)
        ts = np.asarray(ts_l, dtype=np.int64)
        ch = np.asarray(ch_l, dtype=np.int64)

    disorder = _count_disorder(ts, ch)
    if disorder:
        log.warning("parse_csv: %d out-of-order timestamps sorted", disorder)
    return _split_channels(ts, ch, disorder)


def write_csv(fh, probe, conjugate, header=True):
    """Write both streams merged in time order."""
    ts, ch = merge_streams(probe, conjugate)
    if header:
        fh.write(CSV_HEADER + "\n")
    if ts.size:
        fh.write("\n".join(f"{t},{c}" for t, c in zip(ts.tolist(), ch.tolist())))
        fh.write("\n")


def merge_streams(probe, conjugate):
    ts = np.concatenate([probe.timestamps, conjugate.timestamps])
    ch = np.concatenate(
        [np.full(len(probe), PROBE, np.uint8), np.full(len(conjugate), CONJUGATE, np.uint8)]
    )
    order = np.argsort(ts, kind="stable")
    return ts[order], ch[order]


def _read_bytes(reader):
    if isinstance(reader, (bytes, bytearray, memoryview)):
        return bytes(reader)
    if hasattr(reader, "read"):
        return reader.read()
    with open(reader, "rb") as fh:
        return fh.read()


def parse_binary(reader):
    """Parse a TTAG file (path, binary file object or bytes)."""
    data = _read_bytes(reader)
    if len(data) < 4:
        raise FormatError(FORMAT_TRUNCATED, f"file is {len(data)} bytes, header needs {TTAG_HEADER.size}")
    if data[:4] != TTAG_MAGIC:
        raise FormatError(FORMAT_BAD_MAGIC, f"expected magic {TTAG_MAGIC!r}, got {data[:4]!r}")
    if len(data) < TTAG_HEADER.size:
        raise FormatError(FORMAT_TRUNCATED, "incomplete header")
    _, version, _reserved, count = TTAG_HEADER.unpack_from(data)
    if version != TTAG_VERSION:
        raise FormatError(FORMAT_UNSUPPORTED_VERSION, f"version {version} not supported")
    need = TTAG_HEADER.size + count * TTAG_RECORD.itemsize
    if len(data) < need:
        raise FormatError(
            FORMAT_TRUNCATED, f"header declares {count} records, file holds {(len(data) - TTAG_HEADER.size) // TTAG_RECORD.itemsize}"
        )
    rec = np.frombuffer(data, dtype=TTAG_RECORD, count=count, offset=TTAG_HEADER.size)
    if count and np.any(rec["timestamp_ps"] > np.uint64(MAX_TIMESTAMP_PS)):
        raise FormatError(FORMAT_BAD_RECORD, "timestamp overflows the supported range")
    if count and np.any(rec["channel"] > 1):
        raise FormatError(FORMAT_BAD_RECORD, "channel must be 0 or 1")
    ts = rec["timestamp_ps"].astype(np.int64)
    ch = rec["channel"].astype(np.int64)
    disorder = _count_disorder(ts, ch)
    if disorder:
        log.warning("parse_binary: %d out-of-order timestamps sorted", disorder)
    return _split_channels(ts, ch, disorder)


def to_binary(probe, conjugate):
    ts, ch = merge_streams(probe, conjugate)
    rec = np.zeros(ts.size, dtype=TTAG_RECORD)
    rec["timestamp_ps"] = ts
    rec["channel"] = ch
    return TTAG_HEADER.pack(TTAG_MAGIC, TTAG_VERSION, 0, ts.size) + rec.tobytes()


def write_binary(fh, probe, conjugate):
    fh.write(to_binary(probe, conjugate))


def read_tags(path):
    """Dispatch on content: TTAG magic means binary, anything else CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == TTAG_MAGIC:
        return parse_binary(path)
    return parse_csv(path)


def _check_window(window_ps, bin_ps):
    lo, hi = (int(x) for x in window_ps)
    bin_ps = int(bin_ps)
    if bin_ps <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_ps} ps")
    if hi <= lo:
        raise ValidationError(f"empty window [{lo}, {hi})")
    if (hi - lo) % bin_ps:
        raise ValidationError(f"window width {hi - lo} ps is not divisible by bin width {bin_ps} ps")
    return lo, hi, bin_ps


def coincidence_histogram(probe, conjugate, window_ps=(-30_000, 30_000), bin_ps=250,
                          mode="all-pairs", threads=None, backend=None):
    """Histogram delays tau = t_probe - t_conjugate over the half-open window.

    ``mode='all-pairs'`` counts every pair in the window; ``'start-stop'``
    counts, per probe event, only the earliest conjugate inside the window.
    The probe stream is split into contiguous chunks handled by separate
    threads; integer counts make the merged result identical to a serial run.
    """
    lo, hi, bin_ps = _check_window(window_ps, bin_ps)
    k = _backend.get(backend)
    if mode == "all-pairs":
        kernel = k.coincidence_all_pairs
    elif mode == "start-stop":
        kernel = k.coincidence_start_stop
    else:
        raise ValidationError(f"unknown mode {mode!r}")
    p = np.ascontiguousarray(_timestamps(probe), dtype=np.int64)
    c = np.ascontiguousarray(_timestamps(conjugate), dtype=np.int64)
    nb = (hi - lo) // bin_ps
    threads = resolve_threads(threads)

    def work(start, stop):
        counts = np.zeros(nb, dtype=np.int64)
        kernel(p, c, lo, hi, bin_ps, counts, start, stop)
        return counts

    parts = run_chunks(work, chunk_bounds(p.size, threads), threads)
    counts = np.zeros(nb, dtype=np.int64)
    for part in parts:
        counts += part
    return CoincidenceHistogram(lo, hi, bin_ps, counts, int(p.size), int(c.size), mode)


def brute_force_histogram(probe, conjugate, window_ps=(-30_000, 30_000), bin_ps=250,
                          mode="all-pairs", block=256):
    """O(N*M) reference: form every pairwise delay explicitly, block by block."""
    lo, hi, bin_ps = _check_window(window_ps, bin_ps)
    p = np.asarray(_timestamps(probe), dtype=np.int64)
    c = np.asarray(_timestamps(conjugate), dtype=np.int64)
    nb = (hi - lo) // bin_ps
    counts = np.zeros(nb, dtype=np.int64)
    for s in range(0, p.size, block):
        d = p[s:s + block, None] - c[None, :]
        inside = (d >= lo) & (d < hi)
        if mode == "start-stop":
            d = np.where(inside, d, np.iinfo(np.int64).min).max(axis=1, initial=np.iinfo(np.int64).min)
            d = d[d >= lo]
        else:
            d = d[inside]
        counts += np.bincount((d - lo) // bin_ps, minlength=nb)
    return CoincidenceHistogram(lo, hi, bin_ps, counts, int(p.size), int(c.size), mode)


def apply_dead_time(stream, dead_ps, backend=None):
    """Non-paralyzable dead time: drop events closer than ``dead_ps`` to the last kept one."""
    dead_ps = int(dead_ps)
    if dead_ps < 0:
        raise ValidationError("dead time must be non-negative")
    if dead_ps == 0 or len(stream) == 0:
        return stream
    keep = _backend.get(backend).dead_time_mask(stream.timestamps, dead_ps).view(bool)
    return TimeTagStream(stream.channel, stream.timestamps[keep], stream.duration_ps)


def _timestamps(s):
    return s.timestamps if isinstance(s, TimeTagStream) else np.asarray(s, dtype=np.int64)
