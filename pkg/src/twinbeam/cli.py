"""``twinbeam`` command-line interface.

Subcommands: model, coincide, mandel, simulate, squeeze. Exit codes are 0 on
success, 2 for invalid input or parameters, 3 for I/O failures and 4 when a
numerical self-check fails.
"""
import argparse
import json
import logging
import sys

from . import counting, squeezing, synth, timetags
from .errors import ConvergenceError, TwinbeamError, ValidationError
from .parallel import resolve_threads

log = logging.getLogger("twinbeam")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_CONVERGENCE = 0, 2, 3, 4


def _write_json(path, doc):
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _open_out(path):
    if path in (None, "-"):
        return _Stdout()
    return open(path, "w", encoding="utf-8", newline="\n")


class _Stdout:
    def __enter__(self):
        return sys.stdout

    def __exit__(self, *exc):
        sys.stdout.flush()


# ---------------------------------------------------------------- model


def _model_profile(params, threads):
    from .physmodel import coincidence_profile, default_params, load_params
    from .physmodel.biphoton import SpectralGrid

    cfg = load_params(params if params is not None else default_params())
    grid = SpectralGrid(cfg.grid_span_rad_s, cfg.grid_points)
    profile = coincidence_profile(cfg.medium, cfg.geometry, cfg.channels, cfg.beta, cfg.bin_s,
                                  cfg.acq_time_s, cfg.window_s, grid=grid, threads=threads)
    return cfg, profile


def cmd_model(args):
    from .physmodel import profile_summary

    _, profile = _model_profile(args.params, args.threads)
    with _open_out(args.out) as fh:
        profile.to_csv(fh)
    if args.summary:
        summary = profile_summary(profile)
        summary["sfwm_fwhm_ns"] = profile.info["sfwm_fwhm_s"] * 1e9
        _write_json(args.summary, summary)
    return EXIT_OK


# ---------------------------------------------------------------- coincide


def cmd_coincide(args):
    probe, conj = timetags.read_tags(args.input)
    half = int(round(args.window_ns * 1000))
    hist = timetags.coincidence_histogram(probe, conj, (-half, half), args.bin_ps,
                                          mode=args.mode, threads=args.threads)
    with _open_out(args.out) as fh:
        hist.to_csv(fh)
    if args.summary:
        _write_json(args.summary, {
            "mode": hist.mode,
            "window_ps": [hist.window_lo_ps, hist.window_hi_ps],
            "bin_ps": hist.bin_width_ps,
            "n_bins": hist.n_bins,
            "total_coincidences": int(hist.counts.sum()),
            "n_probe": hist.n_start_events,
            "n_conjugate": hist.n_stop_events,
        })
    return EXIT_OK


# ---------------------------------------------------------------- mandel


def cmd_mandel(args):
    probe, conj = timetags.read_tags(args.input)
    dead = None if args.dead_time_ns is None else int(round(args.dead_time_ns * 1000))
    if args.sweep:
        widths = counting.parse_sweep(args.sweep)
    else:
        widths = [int(round(args.bin_ns * 1000))]
    doc = {"channels": {}}
    for name, stream in (("probe", probe), ("conjugate", conj)):
        rows = counting.bin_width_sweep(stream, widths, args.iterations, args.seed,
                                        args.threads, dead_time_ps=dead)
        results = [r.to_dict() for _, r in rows]
        doc["channels"][name] = results if args.sweep else results[0]
    _write_json(args.out, doc)
    return EXIT_OK


# ---------------------------------------------------------------- simulate


def _load_json_arg(value):
    text = value.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(value, encoding="utf-8") as fh:
        return json.load(fh)


def _delay_profile(args):
    if args.model_profile:
        _, profile = _model_profile(None if args.model_profile == "default" else args.model_profile,
                                    args.threads)
        return synth.DelayProfile.from_table(profile.centers_s * 1e12, profile.counts, name="model")
    if args.profile:
        return synth.DelayProfile.from_dict(_load_json_arg(args.profile))
    return synth.DelayProfile.delta()


def cmd_simulate(args):
    k = args.renewal_shape
    if args.target_q is not None:
        k = synth.renewal_shape_for_q(args.target_q, args.rate, args.target_bin_ns * 1e-9)
    source = synth.SourceSpec(args.kind, args.rate, _delay_profile(args),
                              tuple(args.background), k)
    probe, conj, truth = synth.generate(source, args.duration, args.seed)
    detector = synth.DetectorSpec(args.efficiency, int(round(args.dead_time_ns * 1000)),
                                  args.jitter_ps)
    probe = synth.detect(probe, detector, seed=args.seed * 2 + 1)
    conj = synth.detect(conj, detector, seed=args.seed * 2 + 2)
    truth["detector"] = {"efficiency": detector.efficiency, "dead_time_ps": detector.dead_time_ps,
                         "gaussian_jitter_ps": detector.gaussian_jitter_ps}
    truth["n_probe_detected"] = len(probe)
    truth["n_conjugate_detected"] = len(conj)
    if args.format == "csv":
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            timetags.write_csv(fh, probe, conj)
    else:
        with open(args.out, "wb") as fh:
            timetags.write_binary(fh, probe, conj)
    _write_json(args.truth or args.out + ".truth.json", {"truth": truth})
    return EXIT_OK


# ---------------------------------------------------------------- squeeze


def cmd_squeeze(args):
    if args.trace:
        trace = squeezing.read_trace(args.trace)
        if not args.snl:
            raise ValidationError("--snl is required with --trace")
        snl = squeezing.read_trace(args.snl)
    else:
        trace = squeezing.simulate_twin_traces(args.pair_rate, args.eta1, args.eta2,
                                               args.sample_rate, args.duration, args.seed)
        if args.snl:
            snl = squeezing.read_trace(args.snl)
        else:
            snl = squeezing.shot_noise_trace(trace.total_rate_per_s, trace.sample_rate_hz,
                                             args.duration, seed=args.seed + 1)
    spec = squeezing.difference_noise_spectrum(trace, snl, args.rbw, args.vbw or None)
    with _open_out(args.out) as fh:
        spec.to_csv(fh)
    lo, hi = _band(args.band, trace.sample_rate_hz)
    doc = {
        "band_hz": [lo, hi],
        "band_average_db": float(spec.band_average_db(lo, hi)),
        "rbw_hz": spec.rbw_hz,
        "vbw_hz": spec.vbw_hz,
        "segment_length": spec.segment_length,
        "sample_rate_hz": trace.sample_rate_hz,
    }
    if not args.trace:
        doc["expected_db"] = float(squeezing.to_db(squeezing.expected_ratio(args.eta1, args.eta2)))
    if args.summary:
        _write_json(args.summary, doc)
    return EXIT_OK


def _band(text, sample_rate):
    if not text:
        return 0.05 * sample_rate, 0.45 * sample_rate
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise ValidationError(f"band must be lo:hi in Hz, got {text!r}") from None
    if not 0 <= lo < hi:
        raise ValidationError("band must satisfy 0 <= lo < hi")
    return lo, hi


# ---------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="twinbeam", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: $TWINBEAM_THREADS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("model", help="evaluate the composite coincidence model C(tau)")
    m.add_argument("--params", help="parameter JSON (default: bundled 85Rb set)")
    m.add_argument("--out", default="-", help="C(tau) CSV (tau_ns,counts)")
    m.add_argument("--summary", help="JSON summary path")
    m.set_defaults(func=cmd_model)

    c = sub.add_parser("coincide", help="histogram tau = t_probe - t_conjugate")
    c.add_argument("input", help="TTAG or CSV time tags")
    c.add_argument("--out", default="-", help="histogram CSV (tau_ps,counts)")
    c.add_argument("--window-ns", type=float, default=30.0, help="half window (default 30)")
    c.add_argument("--bin-ps", type=int, default=250)
    c.add_argument("--mode", choices=("all-pairs", "start-stop"), default="all-pairs")
    c.add_argument("--summary", help="JSON summary path")
    c.set_defaults(func=cmd_coincide)

    q = sub.add_parser("mandel", help="per-channel Mandel Q with bootstrap errors")
    q.add_argument("input", help="TTAG or CSV time tags")
    q.add_argument("--out", default="-", help="JSON result")
    q.add_argument("--bin-ns", type=float, default=100.0)
    q.add_argument("--iterations", type=int, default=10_000)
    q.add_argument("--sweep", help="bin-width sweep start:stop:step in ns, e.g. 50:500:50")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--dead-time-ns", type=float, default=None,
                   help="warn when bins are shorter than this dead time")
    q.set_defaults(func=cmd_mandel)

    s = sub.add_parser("simulate", help="generate synthetic two-channel time tags")
    s.add_argument("--kind", choices=synth.KINDS, default="twin_pairs")
    s.add_argument("--rate", type=float, default=6e6, help="pair (or per-channel) rate, 1/s")
    s.add_argument("--duration", type=float, default=1.0, help="seconds")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=("ttag", "csv"), default="ttag")
    s.add_argument("--truth", help="truth JSON path (default: OUT.truth.json)")
    s.add_argument("--profile", help="delay profile JSON (text or file), e.g. "
                   '\'{"shape": "gaussian", "sigma_ps": 500}\'')
    s.add_argument("--model-profile", help="sample delays from the model C(tau): "
                   "parameter JSON path or 'default'")
    s.add_argument("--renewal-shape", type=float, default=1.0, help="gamma shape k >= 1")
    s.add_argument("--target-q", type=float, default=None,
                   help="choose k so renewal counts give this Q at --target-bin-ns")
    s.add_argument("--target-bin-ns", type=float, default=100.0)
    s.add_argument("--background", type=float, nargs=2, default=(0.0, 0.0),
                   metavar=("PROBE", "CONJ"))
    s.add_argument("--efficiency", type=float, default=1.0)
    s.add_argument("--dead-time-ns", type=float, default=0.0)
    s.add_argument("--jitter-ps", type=float, default=0.0)
    s.set_defaults(func=cmd_simulate)

    z = sub.add_parser("squeeze", help="intensity-difference noise relative to shot noise")
    z.add_argument("--trace", help="n1,n2 trace CSV with .json sidecar")
    z.add_argument("--snl", help="shot-noise reference trace CSV")
    z.add_argument("--eta1", type=float, default=0.718)
    z.add_argument("--eta2", type=float, default=0.718)
    z.add_argument("--pair-rate", type=float, default=6e6)
    z.add_argument("--sample-rate", type=float, default=2e6)
    z.add_argument("--duration", type=float, default=1.0)
    z.add_argument("--seed", type=int, default=0)
    z.add_argument("--rbw", type=float, default=squeezing.DEFAULT_RBW_HZ)
    z.add_argument("--vbw", type=float, default=squeezing.DEFAULT_VBW_HZ,
                   help="video bandwidth, 0 disables smoothing")
    z.add_argument("--band", help="averaging band lo:hi in Hz")
    z.add_argument("--out", default="-", help="spectrum CSV (freq_hz,db_rel_snl)")
    z.add_argument("--summary", help="JSON summary path")
    z.set_defaults(func=cmd_squeeze)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.threads = resolve_threads(args.threads)
        return args.func(args)
    except ConvergenceError as exc:
        print(f"twinbeam: numerical error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValidationError, json.JSONDecodeError) as exc:
        print(f"twinbeam: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"twinbeam: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"twinbeam: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TwinbeamError as exc:
        print(f"twinbeam: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
