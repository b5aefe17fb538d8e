"""Command-line entry point: generate streams, run detection, compare the
algorithms, analyze seasonality, and evaluate reports against reference labels.

Exit codes: 0 success, 1 usage or configuration error, 2 input-data error.
"""

from __future__ import annotations

import argparse
import sys
from time import perf_counter

import numpy as np

from . import pipeline, seasonality, streamio, synth
from .detect import compare_with_reference
from .domain import ConfigError, DetectorConfig, UnknownSegment
from .timing import STAGE_NAMES


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage errors are 1
        raise UsageError(message)


def _load_config(args) -> DetectorConfig:
    cfg = DetectorConfig()
    if args.config:
        cfg = DetectorConfig.from_mapping(streamio.read_config_mapping(args.config))
    overrides = {}
    if getattr(args, "ref_levels", None) is not None:
        overrides["ref_levels"] = args.ref_levels
    if getattr(args, "rule", None) is not None:
        overrides["split_rule"] = args.rule
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    return cfg


def _read_units(path: str, delta: int):
    t0 = perf_counter()
    schema, records = streamio.read_stream(path)
    start, units = pipeline.unitize(schema, records, delta)
    return schema, start, units, perf_counter() - t0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    spec = pipeline.resolve_exec(cfg)
    schema, start, units, reading = _read_units(args.stream, spec.base_delta)
    result = pipeline.run_detector(
        args.algo, schema, units, start, cfg,
        max_instances=args.max_instances, trace=args.trace is not None,
    )
    result.clock.reading = reading
    streamio.write_report(args.out, result.events)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            for unit_time, paths in result.member_trace:
                fh.write(f"unit:{streamio.format_ts(unit_time)}\tshhh:{','.join(paths)}\n")
    if args.negatives:
        streamio.write_labels(args.negatives, result.negatives)
    print(
        f"{args.algo}: {result.instances} instances, {len(result.events)} anomalies "
        f"-> {args.out}"
    )
    return 0


def _print_stage_table(label: str, clock, peak: int) -> None:
    totals = clock.totals()
    print(f"[{label}]")
    for name in STAGE_NAMES:
        print(f"  {name}: {totals[name]:.4f} s")
    print(f"  Total excluding reading: {clock.total_excluding_reading():.4f} s")
    print(f"  Peak live series: {peak}")


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    spec = pipeline.resolve_exec(cfg)
    schema, start, units, reading = _read_units(args.stream, spec.base_delta)
    result = pipeline.compare_runs(
        schema, units, start, cfg, max_instances=args.max_instances
    )
    result.ada.clock.reading = reading
    result.sta.clock.reading = reading
    _print_stage_table("ada", result.ada.clock, result.ada.peak_series)
    _print_stage_table("sta", result.sta.clock, result.sta.peak_series)
    print(f"member_set_mismatches: {result.member_mismatches}")
    print(f"mean_abs_series_error: {result.mean_abs_series_error:.6f}")
    print(f"accuracy: {result.accuracy:.6f}")
    print(f"precision: {result.precision:.6f}")
    print(f"recall: {result.recall:.6f}")
    return 0


def cmd_seasonality(args) -> int:
    cfg = _load_config(args)
    spec = pipeline.resolve_exec(cfg)
    schema, start, units, _ = _read_units(args.stream, spec.base_delta)
    totals = np.array([float(sum(c.values())) for c in units])
    spectrum = seasonality.dft_magnitude(totals)
    periods = seasonality.dominant_periods(spectrum, args.top)
    print("dominant periods (timeunits):")
    for p in periods:
        print(f"  {p:.2f}  magnitude {spectrum.magnitude_at(1.0 / p):.4f}")
    decomposition = seasonality.atrous_decompose(totals, args.max_scale)
    print("wavelet detail energies:")
    for j, e in enumerate(decomposition.energies, start=1):
        print(f"  scale {j} (~{2 ** j} units): {e:.4f}")
    if len(periods) >= 2:
        day, week = sorted(periods[:2])
        xi = seasonality.seasonal_weight(spectrum, day, week)
        print(f"seasonal mixing weight xi: {xi:.4f} (day {day:.0f}, week {week:.0f})")
    else:
        print("seasonal mixing weight xi: 1.0000 (single seasonality)")
    return 0


def cmd_gen(args) -> int:
    gen_cfg = synth.GeneratorConfig()
    if args.gen_config:
        gen_cfg = synth.GeneratorConfig.from_pairs(streamio.read_kv_file(args.gen_config))
    if args.seed is not None:
        gen_cfg = gen_cfg.with_overrides(seed=args.seed)
    stream = synth.generate(gen_cfg)
    streamio.write_stream(args.out_stream, stream.leaf_paths, stream.records)
    if args.out_labels:
        streamio.write_labels(args.out_labels, stream.labels)
    print(
        f"wrote {len(stream.records)} records over {gen_cfg.n_units} units "
        f"({len(stream.leaf_paths)} leaves) -> {args.out_stream}"
    )
    return 0


def cmd_eval(args) -> int:
    events = streamio.read_report(args.report)
    labels = streamio.read_labels(args.labels)
    negatives = streamio.read_labels(args.negatives) if args.negatives else ()
    report = compare_with_reference(
        ((e.unit_start, e.path) for e in events), labels, negatives
    )
    print(f"TA: {report.true_alarms}")
    print(f"MA: {report.missed}")
    print(f"NA: {report.new_anomalies}")
    print(f"TN: {report.true_negatives}")
    print(f"Type1: {report.type1:.6f}")
    print(f"Type2: {report.type2:.6f}")
    print(f"Type3: {report.type3:.6f}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="treespike", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="detect anomalies over a stream file")
    run.add_argument("stream")
    run.add_argument("--algo", choices=("ada", "sta"), default="ada")
    run.add_argument("--config")
    run.add_argument("--out", required=True)
    run.add_argument("--h", dest="ref_levels", type=int)
    run.add_argument("--rule", dest="rule")
    run.add_argument("--trace")
    run.add_argument("--negatives")
    run.add_argument("--max-instances", type=int)
    run.set_defaults(func=cmd_run)

    comp = sub.add_parser("compare", help="run both algorithms and score the adaptive one")
    comp.add_argument("stream")
    comp.add_argument("--config")
    comp.add_argument("--h", dest="ref_levels", type=int)
    comp.add_argument("--rule", dest="rule")
    comp.add_argument("--max-instances", type=int)
    comp.set_defaults(func=cmd_compare)

    seas = sub.add_parser("seasonality", help="spectral and wavelet period analysis")
    seas.add_argument("stream")
    seas.add_argument("--config")
    seas.add_argument("--max-scale", type=int, default=8)
    seas.add_argument("--top", type=int, default=4)
    seas.set_defaults(func=cmd_seasonality)

    gen = sub.add_parser("gen", help="generate a synthetic labeled stream")
    gen.add_argument("--gen-config")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out-stream", required=True)
    gen.add_argument("--out-labels")
    gen.set_defaults(func=cmd_gen)

    ev = sub.add_parser("eval", help="compare a report against reference labels")
    ev.add_argument("report")
    ev.add_argument("labels")
    ev.add_argument("--negatives")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (
        streamio.StreamFormatError,
        pipeline.InsufficientBootstrap,
        UnknownSegment,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
