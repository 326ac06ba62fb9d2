"""Thread-count resolution and deterministic chunked execution."""
import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "TWINBEAM_THREADS"


def resolve_threads(threads=None):
    """Explicit value, else ``$TWINBEAM_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    return threads


def chunk_bounds(n, parts):
    """Split range(n) into at most ``parts`` contiguous [start, stop) pieces."""
    parts = max(1, min(parts, n)) if n else 1
    edges = [n * p // parts for p in range(parts + 1)]
    return [(edges[p], edges[p + 1]) for p in range(parts) if edges[p + 1] > edges[p]]


def run_chunks(fn, bounds, threads):
    """Call ``fn(start, stop)`` for each bound; results come back in order."""
    if threads <= 1 or len(bounds) <= 1:
        return [fn(s, e) for s, e in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
