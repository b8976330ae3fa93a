"""Command-line interface.

Subcommands mirror a bench workflow: `simulate` produces time-tag files
from a config, `detect` and `split` transform them, `calibrate` extracts
a recovery curve, `correlate` builds correlation histograms and
zero-delay statistics, `predict` evaluates the analytic suppression
integrals, and `sweep` runs canned multi-panel parameter sweeps.  Report
commands render figures next to their CSV/JSON outputs unless
--no-figures is given.

Exit codes: 0 success, 2 invalid parameters or inputs, 3 numerical
failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import plots, reports, tagio
from .calibration import DEFAULT_BIN_PS, DEFAULT_SMOOTH_BINS, calibrate_ter
from .correlator import g2_histogram, g3_surface, gn_zero_stderr
from .detector import (
    DetectorConfig,
    constant_ter,
    heaviside_ter,
)
from .errors import NumericalError, ParameterError, ParseError
from .experiments import apply_detectors, simulate_split_streams
from .sources import PS_PER_S, SourceKind, SourceModel
from .tagio import read_tags
from .correlator import incident_for_registered, predict_gn_zero


def _fail(msg):
    raise ParameterError(msg)


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


_SOURCE_KINDS = {k.value: k for k in SourceKind}


def _source_from_config(table):
    if not isinstance(table, dict):
        _fail("config: [source] table is missing")
    kind = table.get("kind")
    if kind not in _SOURCE_KINDS:
        _fail(f"config: source.kind must be one of {sorted(_SOURCE_KINDS)}, "
              f"got {kind!r}")
    rate = table.get("mean_rate")
    if not isinstance(rate, (int, float)) or rate <= 0:
        _fail("config: source.mean_rate must be a positive number")
    T = table.get("T", 0.0)
    return SourceModel(_SOURCE_KINDS[kind], float(rate), float(T))


def _detector_from_config(table):
    """Detector table -> DetectorConfig or None for kind='none'/absent."""
    if table is None:
        return None
    kind = table.get("kind", "heaviside")
    q = float(table.get("intrinsic_efficiency", 1.0))
    if kind == "none":
        return None
    if kind == "heaviside":
        if "t_d" not in table:
            _fail("config: detector.t_d is required for kind='heaviside'")
        ter = heaviside_ter(float(table["t_d"]))
    elif kind == "file":
        if "path" not in table:
            _fail("config: detector.path is required for kind='file'")
        ter = tagio.read_ter_csv(table["path"], eta_inf=table.get("eta_inf"))
    elif kind == "flat":
        ter = constant_ter(float(table.get("eta", 1.0)))
    else:
        _fail(f"config: unknown detector.kind {kind!r}")
    return DetectorConfig(ter=ter, intrinsic_efficiency=q)


def _resolve(args, config, key, default=None):
    val = getattr(args, key, None)
    if val is not None:
        return val
    return config.get(key, default)


def _tag_path(outdir, stem, fmt):
    return outdir / f"{stem}.{'bin' if fmt == 'bin' else 'csv'}"


def cmd_simulate(args):
    config = _load_toml(args.config)
    model = _source_from_config(config.get("source"))
    detector = _detector_from_config(config.get("detector"))
    m = int(_resolve(args, config, "splitter_m", 1))
    duration = _resolve(args, config, "duration_s")
    if duration is None or float(duration) <= 0:
        _fail("config: duration_s must be a positive number")
    duration = float(duration)
    seed = int(_resolve(args, config, "seed", 0))
    fmt = _resolve(args, config, "format", "csv")
    outdir = Path(_resolve(args, config, "output_dir", "out"))
    outdir.mkdir(parents=True, exist_ok=True)

    src_seed, det_seed = np.random.SeedSequence(seed).spawn(2)
    incident = simulate_split_streams(model, m, duration, src_seed)
    streams = incident
    if detector is not None:
        streams = apply_detectors(incident, detector, det_seed)

    files = []
    for s in streams:
        path = _tag_path(outdir, f"channel_{s.channel:02d}", fmt)
        tagio.write_tags(path, s, fmt)
        files.append(str(path))
    if detector is not None and config.get("keep_incident", False):
        for s in incident:
            path = _tag_path(outdir, f"incident_{s.channel:02d}", fmt)
            tagio.write_tags(path, s, fmt)
            files.append(str(path))

    manifest = {
        "source": {"kind": model.kind.value, "mean_rate": model.mean_rate,
                   "T": model.T},
        "detected": detector is not None,
        "splitter_m": m,
        "duration_s": duration,
        "duration_ps": streams[0].duration_ps,
        "seed": seed,
        "rates_per_s": [s.rate for s in streams],
        "files": files,
    }
    tagio.write_json(outdir / "manifest.json", manifest)
    print(f"wrote {len(files)} stream file(s) to {outdir}")
    return 0


def _duration_ps_arg(args):
    if getattr(args, "duration_s", None) is None:
        return None
    return int(round(float(args.duration_s) * PS_PER_S))


def _read_streams(paths, duration_ps):
    streams = []
    for p in paths:
        streams.extend(read_tags(p, duration_ps))
    if not streams:
        _fail("no tag records found in the input(s)")
    if duration_ps is None:
        # put every stream on the longest inferred clock
        common = max(s.duration_ps for s in streams)
        streams = [type(s)(s.channel, s.tags, common) for s in streams]
    return streams


def _pick_channel(streams, channel):
    if channel is not None:
        for s in streams:
            if s.channel == channel:
                return s
        _fail(f"channel {channel} not present in the input")
    if len(streams) > 1:
        _fail(f"input holds {len(streams)} channels; pick one with --channel")
    return streams[0]


def _build_ter_from_flags(args):
    given = [x is not None for x in (args.t_d, args.ter_file, args.flat)]
    if sum(given) != 1:
        _fail("give exactly one of --t-d, --ter-file, --flat")
    if args.t_d is not None:
        return heaviside_ter(args.t_d)
    if args.ter_file is not None:
        return tagio.read_ter_csv(args.ter_file)
    return constant_ter(args.flat)


def cmd_detect(args):
    ter = _build_ter_from_flags(args)
    config = DetectorConfig(ter=ter, intrinsic_efficiency=args.efficiency)
    streams = _read_streams([args.input], _duration_ps_arg(args))
    seed = args.seed if args.seed is not None else 0
    detected = apply_detectors(streams, config, seed)
    fmt = args.format or ("bin" if str(args.output).endswith(".bin") else "csv")
    tagio.write_tags(args.output, detected, fmt)
    kept = sum(s.n for s in detected)
    total = sum(s.n for s in streams)
    print(f"registered {kept} of {total} tags -> {args.output}")
    return 0


def cmd_split(args):
    from .detector import split_stream

    streams = _read_streams([args.input], _duration_ps_arg(args))
    stream = _pick_channel(streams, args.channel)
    seed = args.seed if args.seed is not None else 0
    outdir = Path(args.output_dir or "out")
    outdir.mkdir(parents=True, exist_ok=True)
    fmt = args.format or "csv"
    parts = split_stream(stream, args.m, seed)
    for s in parts:
        tagio.write_tags(_tag_path(outdir, f"channel_{s.channel:02d}", fmt),
                         s, fmt)
    print(f"split {stream.n} tags over {args.m} channels in {outdir}")
    return 0


def cmd_calibrate(args):
    streams = _read_streams([args.input], _duration_ps_arg(args))
    stream = _pick_channel(streams, args.channel)
    curve, wtd, fit = calibrate_ter(
        stream, bin_ps=args.bin_ps, t_min=args.t_min,
        smooth=not args.no_smooth, smooth_bins=args.smooth_bins,
        eta_inf=args.eta_inf,
    )
    outdir = Path(args.output_dir or "out")
    outdir.mkdir(parents=True, exist_ok=True)
    tagio.write_ter_csv(outdir / "ter.csv", curve)
    tagio.write_wtd_csv(outdir / "waiting_times.csv", wtd)
    tagio.write_json(outdir / "tail_fit.json", tagio.tail_fit_payload(fit))
    if not args.no_figures:
        plots.save_wtd(outdir / "waiting_times.png", wtd, fit)
        plots.save_ter_curve(outdir / "ter.png", curve)
    print(f"tail rate {fit.rate:.6g}/s, residual {fit.residual:.3g}; "
          f"recovery curve with {curve.dt_ps.size} samples -> {outdir}")
    return 0


def cmd_correlate(args):
    streams = _read_streams(args.inputs, _duration_ps_arg(args))
    if len(streams) < 2:
        _fail("correlate needs at least two channels (one per input file "
              "or a multi-channel file)")
    outdir = Path(args.output_dir or "out")
    outdir.mkdir(parents=True, exist_ok=True)
    order = len(streams)
    value, stderr = gn_zero_stderr(streams, args.zero_bin_ps or args.bin_ps)
    summary = {
        "order": order,
        "bin_ps": args.zero_bin_ps or args.bin_ps,
        "value": value,
        "stderr": stderr,
    }
    tagio.write_json(outdir / "correlations.json", summary)
    if order == 2:
        hist = g2_histogram(streams[0], streams[1], args.bin_ps,
                            args.max_tau_ps, n_chunks=args.chunks)
        tagio.write_histogram_csv(outdir / "g2.csv", hist)
        if not args.no_figures:
            plots.save_g2(outdir / "g2.png", hist)
    elif order == 3:
        hist = g3_surface(streams[0], streams[1], streams[2], args.bin_ps,
                          args.max_tau_ps, n_chunks=args.chunks)
        tagio.write_histogram_csv(outdir / "g3.csv", hist)
        if not args.no_figures:
            plots.save_g3(outdir / "g3.png", hist)
    print(f"g{order}(0) = {value:.4f} +- {stderr:.4f} -> {outdir}")
    return 0


def cmd_predict(args):
    eff = tagio.read_efficiency_csv(args.efficiency)
    if (args.mean_rate is None) == (args.registered_rate is None):
        _fail("give exactly one of --mean-rate, --registered-rate")
    if args.mean_rate is not None:
        mean_R = args.mean_rate
    else:
        mean_R = incident_for_registered(eff, args.registered_rate)
    from .correlator import predict_registered_rate

    payload = {
        "mean_R_per_s": mean_R,
        "registered_rate_per_s": predict_registered_rate(eff, mean_R),
        "orders": {str(n): predict_gn_zero(eff, mean_R, n, rtol=args.rtol)
                   for n in args.orders},
    }
    out = Path(args.output or "predictions.json")
    tagio.write_json(out, payload)
    line = ", ".join(f"g{n}(0) = {payload['orders'][str(n)]:.4f}"
                     for n in args.orders)
    print(f"{line} -> {out}")
    return 0


def cmd_sweep(args):
    outdir = Path(args.output_dir or "out")
    kwargs = {"seed": args.seed if args.seed is not None else 0,
              "figures": not args.no_figures}
    if args.t_d is not None:
        kwargs["t_d"] = args.t_d
    summaries = []
    if args.config is not None:
        config = _load_toml(args.config)
        analyses = config.get("analysis")
        if not analyses:
            _fail("config: [[analysis]] list is empty; nothing to sweep")
        for entry in analyses:
            name = entry.get("type")
            params = {k: v for k, v in entry.items() if k != "type"}
            run_kwargs = dict(kwargs)
            if args.duration_scale is not None:
                run_kwargs["duration_scale"] = args.duration_scale
            run_kwargs.update(params)
            summaries.append(reports.run_preset(name, outdir, **run_kwargs))
    else:
        if args.preset is None:
            _fail("give --preset or --config")
        if args.duration_scale is not None and args.preset in ("saturation",
                                                               "array"):
            kwargs["duration_scale"] = args.duration_scale
        summaries.append(reports.run_preset(args.preset, outdir, **kwargs))
    failures = sum(len(s["failures"]) for s in summaries)
    tagio.write_json(outdir / "summary.json", {"sweeps": summaries})
    n_files = sum(len(s["files"]) for s in summaries)
    print(f"wrote {n_files} file(s) to {outdir}"
          + (f" ({failures} point failure(s); see summary.json)"
             if failures else ""))
    return 0


def _add_io_flags(sub, output=False):
    if output:
        sub.add_argument("--output", help="output tag file")
    sub.add_argument("--duration-s", type=float,
                     help="observation window (else inferred from last tag)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="tercorr",
        description="Counting and correlation statistics of single-photon "
                    "detectors with finite efficiency recovery.",
    )
    parser.add_argument("--seed", type=int, help="root RNG seed (default 0)")
    parser.add_argument("--threads", type=int,
                        help="best-effort compiled-kernel thread cap")
    parser.add_argument("--format", choices=("csv", "bin"),
                        help="tag file format for writers")
    parser.add_argument("--output-dir", help="directory for outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate tag files from a config")
    p.add_argument("--config", required=True, help="TOML experiment config")
    p.add_argument("--duration-s", type=float, help="override config duration")
    p.add_argument("--splitter-m", type=int, help="override config splitter")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("detect", help="apply a recovering detector to tags")
    p.add_argument("--input", required=True)
    p.add_argument("--t-d", type=float, help="step recovery time (s)")
    p.add_argument("--ter-file", help="tabulated recovery curve CSV")
    p.add_argument("--flat", type=float, help="flat efficiency (no recovery)")
    p.add_argument("--efficiency", type=float, default=1.0,
                   help="recovery-independent intrinsic efficiency")
    p.add_argument("--output", required=True)
    p.add_argument("--duration-s", type=float)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("split", help="route tags over m output channels")
    p.add_argument("--input", required=True)
    p.add_argument("-m", type=int, required=True, help="number of outputs")
    p.add_argument("--channel", type=int, help="input channel to split")
    p.add_argument("--duration-s", type=float)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("calibrate",
                       help="extract a recovery curve from interarrival times")
    p.add_argument("--input", required=True)
    p.add_argument("--channel", type=int)
    p.add_argument("--bin-ps", type=int, default=DEFAULT_BIN_PS)
    p.add_argument("--t-min", type=float,
                   help="tail-fit start (s); default 5x the histogram peak")
    p.add_argument("--no-smooth", action="store_true")
    p.add_argument("--smooth-bins", type=int, default=DEFAULT_SMOOTH_BINS)
    p.add_argument("--eta-inf", type=float,
                   help="override the recovered-efficiency estimate")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--duration-s", type=float)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("correlate",
                       help="correlation histograms and zero-delay statistics")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--bin-ps", type=int, default=100)
    p.add_argument("--max-tau-ps", type=int, default=10_000)
    p.add_argument("--zero-bin-ps", type=int,
                   help="separate bin width for the zero-delay statistic")
    p.add_argument("--chunks", type=int, default=1,
                   help="split the histogram sweep into this many chunks")
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--duration-s", type=float)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("predict",
                       help="analytic zero-delay correlations under saturation")
    p.add_argument("--efficiency", required=True,
                   help="saturation curve CSV (R_per_s,R_prime_per_s,epsilon)")
    p.add_argument("--mean-rate", type=float, help="mean incident rate (1/s)")
    p.add_argument("--registered-rate", type=float,
                   help="target mean registered rate (1/s)")
    p.add_argument("--orders", type=int, nargs="+", default=[2, 3, 4])
    p.add_argument("--rtol", type=float, default=1e-5)
    p.add_argument("--output", help="JSON output path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="canned parameter sweeps with figures")
    p.add_argument("--preset", choices=reports.PRESETS)
    p.add_argument("--config", help="TOML with [[analysis]] entries")
    p.add_argument("--t-d", type=float, help="step recovery time (s)")
    p.add_argument("--duration-scale", type=float,
                   help="scale Monte Carlo durations (quick looks)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads:
        try:
            import numba

            numba.set_num_threads(max(1, min(args.threads,
                                             numba.config.NUMBA_NUM_THREADS)))
        except Exception:
            pass
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"tercorr: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"tercorr: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"tercorr: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
