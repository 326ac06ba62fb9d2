"""Compare the compiled kernels with their NumPy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each kernel runs on the same inputs under both backends; the script checks the
outputs agree before reporting best-of-``repeat`` wall times.
"""
import argparse
import json
import sys
import timeit

import numpy as np

from twinbeam import _backend


def cases(rng):
    rate, dur = 6e6, 10**11   # 6 MHz for 0.1 s, in ps
    p = np.sort(rng.integers(0, dur, int(rate * 0.1))).astype(np.int64)
    c = np.sort(p + rng.laplace(0, 3000, p.size).astype(np.int64)).clip(0)
    nb = 240

    def all_pairs(k):
        out = np.zeros(nb, dtype=np.int64)
        k.coincidence_all_pairs(p, c, -30_000, 30_000, 250, out, 0, p.size)
        return out

    def start_stop(k):
        out = np.zeros(nb, dtype=np.int64)
        k.coincidence_start_stop(p, c, -30_000, 30_000, 250, out, 0, p.size)
        return out

    def dead_time(k):
        return np.asarray(k.dead_time_mask(p, 30_000), dtype=bool)

    def binning(k):
        out = np.zeros(dur // 100_000, dtype=np.int64)
        k.bin_counts(p, 100_000, out.size, out)
        return out

    n, nv = 2048, 4001
    a = rng.normal(size=(n, 3)) + 1j * (0.5 + rng.random((n, 3)))
    kk = rng.normal(size=(n, 3))
    v = np.linspace(-6, 6, nv)
    w = np.exp(-v**2)

    def poles(k):
        out = np.empty(n, dtype=complex)
        k.pole_product_average(a, kk, v, w, out, 0, n)
        return out

    return {"coincidence_all_pairs": all_pairs, "coincidence_start_stop": start_stop,
            "dead_time_mask": dead_time, "bin_counts": binning, "pole_product_average": poles}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write results as JSON")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "cython" not in backends:
        print("compiled core not built; only the NumPy fallback is available", file=sys.stderr)
    rng = np.random.default_rng(0)
    rows = []
    print(f"{'kernel':<24}" + "".join(f"{b + ' (s)':>14}" for b in backends) + f"{'speed-up':>10}")
    for name, fn in cases(rng).items():
        results = {b: fn(_backend.get(b)) for b in backends}
        ref = results["numpy"]
        for b, r in results.items():
            if not np.allclose(r, ref, rtol=1e-12, atol=0):
                raise SystemExit(f"{name}: {b} disagrees with numpy")
        times = {b: min(timeit.repeat(lambda: fn(_backend.get(b)), number=1, repeat=args.repeat))
                 for b in backends}
        speedup = times["numpy"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<24}" + "".join(f"{times[b]:>14.4f}" for b in backends) + f"{speedup:>10.1f}x")
        rows.append({"kernel": name, "seconds": times, "speedup": speedup})
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
