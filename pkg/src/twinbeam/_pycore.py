"""NumPy implementations of the compiled kernels in ``_core.pyx``.

Signatures and output conventions match the Cython versions exactly so the two
are interchangeable; see ``_backend``.
"""
import numpy as np

_INT64_MAX = np.iinfo(np.int64).max
_PAIR_CHUNK = 1 << 16


def _partner_range(probe, conj, lo, hi):
    # conj[j] in (t - hi, t - lo]  <=>  lo <= t - conj[j] < hi
    upper = np.where(probe > _INT64_MAX + lo, _INT64_MAX, probe - lo)
    j_lo = np.searchsorted(conj, probe - hi, side="right")
    j_hi = np.searchsorted(conj, upper, side="right")
    return j_lo, j_hi


def coincidence_all_pairs(probe, conj, lo, hi, width, counts, start, stop):
    probe = np.asarray(probe, dtype=np.int64)
    conj = np.asarray(conj, dtype=np.int64)
    nb = counts.shape[0]
    for s in range(start, stop, _PAIR_CHUNK):
        t = probe[s:min(stop, s + _PAIR_CHUNK)]
        j_lo, j_hi = _partner_range(t, conj, lo, hi)
        per = j_hi - j_lo
        total = int(per.sum())
        if total == 0:
            continue
        offsets = np.cumsum(per) - per
        idx = np.arange(total, dtype=np.int64) - np.repeat(offsets - j_lo, per)
        d = np.repeat(t, per) - conj[idx]
        counts += np.bincount((d - lo) // width, minlength=nb)[:nb]


def coincidence_start_stop(probe, conj, lo, hi, width, counts, start, stop):
    probe = np.asarray(probe, dtype=np.int64)[start:stop]
    conj = np.asarray(conj, dtype=np.int64)
    if probe.size == 0 or conj.size == 0:
        return
    j_lo = np.searchsorted(conj, probe - hi, side="right")
    ok = j_lo < conj.size
    d = probe[ok] - conj[j_lo[ok]]
    d = d[d >= lo]
    nb = counts.shape[0]
    counts += np.bincount((d - lo) // width, minlength=nb)[:nb]


def dead_time_mask(t, dead):
    t = np.asarray(t, dtype=np.int64)
    keep = np.zeros(t.size, dtype=np.uint8)
    if t.size == 0:
        return keep
    # next candidate after each event; walk the chain of kept events only
    nxt = np.searchsorted(t, t + dead, side="left").tolist()
    n = t.size
    i = 0
    kept = []
    while i < n:
        kept.append(i)
        j = nxt[i]
        i = j if j > i else i + 1
    keep[kept] = 1
    return keep


def bin_counts(t, width, nbins, counts):
    b = np.asarray(t, dtype=np.int64) // width
    b = b[b < nbins]
    counts += np.bincount(b, minlength=nbins)[:nbins]


def pole_product_average(a, k, v, w, out, start, stop, chunk=256):
    a = np.asarray(a)
    k = np.asarray(k)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    for s in range(start, stop, chunk):
        e = min(stop, s + chunk)
        den = np.ones((e - s, v.size), dtype=complex)
        for p in range(a.shape[1]):
            den *= a[s:e, p, None] - k[s:e, p, None] * v[None, :]
        out[s:e] = (w[None, :] / den).sum(axis=1)
