"""Command-line front end.

Subcommands:

    run        one session with a verbose transcript summary
    sweep      full benchmark sweep to CSV (flags or key=value config file)
    estimate   standalone estimation: key length + mismatch counts -> q
    histogram  iteration-count distribution from a sweep CSV
    summarize  aggregate per-cell statistics from a sweep CSV
"""

from __future__ import annotations

import argparse
import sys

from . import bench
from .estimator import OutOfMonotoneRangeError, estimate_from_samples, MismatchObservation


def _parse_config_file(path) -> dict[str, str]:
    """key=value lines; blank lines and #-comments ignored."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _csv_list(text: str, conv):
    return tuple(conv(part) for part in text.split(",") if part)


def _spec_from_args(args) -> bench.SweepSpec:
    values: dict = {}
    if args.config:
        raw = _parse_config_file(args.config)
        if "protocols" in raw:
            values["protocols"] = _csv_list(raw["protocols"], str)
        if "n_values" in raw:
            values["n_values"] = _csv_list(raw["n_values"], int)
        if "qber_values" in raw:
            values["qber_values"] = _csv_list(raw["qber_values"], float)
        for key, conv in (
            ("seeds", int),
            ("latency_ms", float),
            ("error_model", str),
            ("estimation_samples", int),
            ("qber_abort_threshold", float),
            ("max_iterations", int),
        ):
            if key in raw:
                values[key] = conv(raw[key])
    if args.protocol:
        values["protocols"] = tuple(args.protocol)
    if args.n:
        values["n_values"] = tuple(args.n)
    if args.qber:
        values["qber_values"] = tuple(args.qber)
    if args.seeds is not None:
        values["seeds"] = args.seeds
    if args.latency_ms is not None:
        values["latency_ms"] = args.latency_ms
    if args.error_model:
        values["error_model"] = args.error_model
    return bench.SweepSpec(**values)


def cmd_run(args) -> int:
    record = bench.run_single(
        args.protocol[0] if args.protocol else "sardub19",
        args.n[0] if args.n else 1000,
        args.qber[0] if args.qber else 0.03,
        args.seed,
        latency_ms=args.latency_ms if args.latency_ms is not None else 20.0,
        error_model=args.error_model or "per-bit",
    )
    for name, value in zip(bench.CSV_COLUMNS, record.to_row()):
        print(f"{name:22s} {value}")
    return 0


def cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    out = args.out or "sweep.csv"
    try:
        records = bench.run_sweep(spec, out_path=out, workers=args.workers)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(records)} rows to {out}")
    return 0


def cmd_estimate(args) -> int:
    obs = [
        MismatchObservation(n=args.n[0], mismatch_count=c) for c in args.mismatches
    ]
    try:
        est = estimate_from_samples(obs, method=args.method)
    except OutOfMonotoneRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"q_hat    {est.q_hat:.6f}")
    print(f"qber_hat {est.qber_hat:.8f}")
    print(f"method   {est.method}")
    return 0


def cmd_histogram(args) -> int:
    records = bench.read_records(args.csv)
    n_values = sorted({r.n for r in records if r.protocol == "sardub19"})
    for n in args.n or n_values:
        hist = bench.iteration_histogram(records, n)
        print(bench.format_histogram(hist, n))
    return 0


def cmd_summarize(args) -> int:
    report = bench.summarize(bench.read_records(args.csv))
    print(report.to_text())
    if args.out:
        report.write_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--protocol", action="append", choices=bench.PROTOCOLS)
    parser.add_argument("--n", action="append", type=int)
    parser.add_argument("--qber", action="append", type=float)
    parser.add_argument("--seeds", type=int)
    parser.add_argument("--latency-ms", type=float, dest="latency_ms")
    parser.add_argument("--error-model", choices=("per-bit", "exact"))
    parser.add_argument("--config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sardub19")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a single session")
    _add_common(p_run)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a benchmark sweep to CSV")
    _add_common(p_sweep)
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_est = sub.add_parser("estimate", help="invert mismatch counts to q")
    p_est.add_argument("--n", action="append", type=int, required=True)
    p_est.add_argument("--method", choices=("exact", "poly"), default="exact")
    p_est.add_argument("mismatches", nargs="+", type=float)
    p_est.set_defaults(func=cmd_estimate)

    p_hist = sub.add_parser("histogram", help="iteration histogram from CSV")
    p_hist.add_argument("csv")
    p_hist.add_argument("--n", action="append", type=int)
    p_hist.set_defaults(func=cmd_histogram)

    p_sum = sub.add_parser("summarize", help="aggregate statistics from CSV")
    p_sum.add_argument("csv")
    p_sum.add_argument("--out")
    p_sum.set_defaults(func=cmd_summarize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
