"""Benchmark sweeps, per-run CSV records, and aggregate statistics.

A sweep cell is one (protocol, n, qber) combination; each of its seeds
derives every random input of that run (keys, error injection, master
seed) from a single hash, so any cell can be reproduced in isolation.
The CSV schema is frozen: the columns below, header row included, UTF-8,
LF line endings.  Floats are written with shortest round-trip formatting
so recomputing a derived column from a parsed file is exact.

``compute_ms`` measures only the reconciliation computation (key
generation and corruption excluded); simulated message latency is
reported separately and the two are combined only in the throughput
column.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .cascade import CascadeConfig, cascade_session
from .keymodel import SiftedKey
from .protocol import SessionConfig, run_session
from .randperm import MasterSeed
from .simnet import ErrorSpec, corrupt, make_channel

PROTOCOLS = ("sardub19", "cascade")

CSV_COLUMNS = (
    "protocol",
    "n",
    "qber_true",
    "seed",
    "iterations",
    "messages",
    "parities_disclosed",
    "bits_discarded",
    "final_key_len",
    "qber_est",
    "compute_ms",
    "simulated_latency_ms",
    "throughput_bps",
    "success",
    "abort_reason",
    "residual_errors",
)

_DEFAULT_QBERS = tuple(round(0.01 + 0.005 * i, 6) for i in range(19))


@dataclass(frozen=True)
class SweepSpec:
    """What to run: protocols x key lengths x QBER values x seeds."""

    protocols: tuple[str, ...] = PROTOCOLS
    n_values: tuple[int, ...] = (1000, 10000, 100000)
    qber_values: tuple[float, ...] = _DEFAULT_QBERS
    seeds: int = 1000
    latency_ms: float = 20.0
    error_model: str = "per-bit"
    estimation_samples: int = 1
    # Headroom above the sweep's top QBER so estimate fluctuations at 10%
    # do not trip the eavesdropping abort; single sessions default to the
    # stricter SessionConfig threshold.
    qber_abort_threshold: float = 0.25
    max_iterations: int = 50

    def __post_init__(self) -> None:
        if not self.protocols or not self.n_values or not self.qber_values:
            raise ValueError("protocols, n_values and qber_values must be non-empty")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        unknown = set(self.protocols) - set(PROTOCOLS)
        if unknown:
            raise ValueError(f"unknown protocols: {sorted(unknown)}")

    def cells(self) -> list[tuple[str, int, float]]:
        return list(product(self.protocols, self.n_values, self.qber_values))


@dataclass
class RunRecord:
    protocol: str
    n: int
    qber_true: float
    seed: int
    iterations: int
    messages: int
    parities_disclosed: int
    bits_discarded: int
    final_key_len: int
    qber_est: float
    compute_ms: float
    simulated_latency_ms: float
    throughput_bps: float
    success: bool
    abort_reason: str = ""
    residual_errors: int = 0

    def to_row(self) -> list[str]:
        return [
            self.protocol,
            str(self.n),
            repr(self.qber_true),
            str(self.seed),
            str(self.iterations),
            str(self.messages),
            str(self.parities_disclosed),
            str(self.bits_discarded),
            str(self.final_key_len),
            repr(self.qber_est),
            repr(self.compute_ms),
            repr(self.simulated_latency_ms),
            repr(self.throughput_bps),
            str(int(self.success)),
            self.abort_reason,
            str(self.residual_errors),
        ]

    @classmethod
    def from_row(cls, row: list[str]) -> "RunRecord":
        return cls(
            protocol=row[0],
            n=int(row[1]),
            qber_true=float(row[2]),
            seed=int(row[3]),
            iterations=int(row[4]),
            messages=int(row[5]),
            parities_disclosed=int(row[6]),
            bits_discarded=int(row[7]),
            final_key_len=int(row[8]),
            qber_est=float(row[9]),
            compute_ms=float(row[10]),
            simulated_latency_ms=float(row[11]),
            throughput_bps=float(row[12]),
            success=bool(int(row[13])),
            abort_reason=row[14],
            residual_errors=int(row[15]),
        )


def _run_inputs(protocol: str, n: int, qber: float, seed: int):
    """All per-run randomness, derived from one digest."""
    h = hashlib.sha256(f"{protocol}|{n}|{qber:.6f}|{seed}".encode()).digest()

    def sub(tag: bytes) -> bytes:
        return hashlib.sha256(h + tag).digest()

    key_seed = int.from_bytes(sub(b"key")[:8], "little")
    err_seed = int.from_bytes(sub(b"err")[:8], "little")
    aux_seed = int.from_bytes(sub(b"aux")[:8], "little")
    master = MasterSeed(sub(b"master"))
    return key_seed, err_seed, aux_seed, master


def make_run_keys(
    protocol: str, n: int, qber: float, seed: int, error_model: str
) -> tuple[SiftedKey, SiftedKey, np.ndarray, int, MasterSeed]:
    """Alice's key, Bob's corrupted copy, true flip positions, aux seed, master seed."""
    key_seed, err_seed, aux_seed, master = _run_inputs(protocol, n, qber, seed)
    alice = SiftedKey.random(n, np.random.default_rng(key_seed))
    if error_model == "exact":
        spec = ErrorSpec(model="exact", q=round(qber * n), rng_seed=err_seed)
    else:
        spec = ErrorSpec(model="per-bit", p=qber, rng_seed=err_seed)
    bob, flips = corrupt(alice, spec)
    return alice, bob, flips, aux_seed, master


def _throughput(final_len: int, compute_ms: float, latency_ms: float) -> float:
    total_s = (compute_ms + latency_ms) / 1000.0
    if total_s <= 0:
        return 0.0
    return final_len / total_s


def run_single(
    protocol: str,
    n: int,
    qber: float,
    seed: int,
    latency_ms: float = 20.0,
    error_model: str = "per-bit",
    estimation_samples: int = 1,
    qber_abort_threshold: float = 0.25,
    max_iterations: int = 50,
) -> RunRecord:
    """One reconciliation run, fully determined by its arguments."""
    alice, bob, flips, aux_seed, master = make_run_keys(
        protocol, n, qber, seed, error_model
    )
    channel = make_channel(latency_ms)
    if protocol == "sardub19":
        cfg = SessionConfig(
            max_iterations=max_iterations,
            qber_abort_threshold=qber_abort_threshold,
            estimation_samples=estimation_samples,
        )
        t0 = time.perf_counter()
        res_a, res_b = run_session(alice, bob, master, cfg, channel)
        compute_ms = (time.perf_counter() - t0) * 1000.0
        latency = channel.stats.simulated_latency_ms
        final_len = len(res_a.reconciled_key)
        return RunRecord(
            protocol=protocol,
            n=n,
            qber_true=qber,
            seed=seed,
            iterations=res_a.iterations_used,
            messages=channel.stats.messages_sent,
            parities_disclosed=res_a.parities_disclosed,
            bits_discarded=res_a.bits_discarded,
            final_key_len=final_len,
            qber_est=res_b.q_estimate.qber_hat if res_b.q_estimate else math.nan,
            compute_ms=compute_ms,
            simulated_latency_ms=latency,
            throughput_bps=_throughput(final_len, compute_ms, latency),
            success=res_a.success,
            abort_reason=res_a.abort_reason or "",
        )
    if protocol == "cascade":
        t0 = time.perf_counter()
        result = cascade_session(
            alice,
            bob,
            CascadeConfig(shuffle_seed=aux_seed),
            sample_seed=aux_seed ^ 0x5DEECE66D,
            channel=channel,
        )
        compute_ms = (time.perf_counter() - t0) * 1000.0
        latency = channel.stats.simulated_latency_ms
        final_len = len(result.corrected_key)
        return RunRecord(
            protocol=protocol,
            n=n,
            qber_true=qber,
            seed=seed,
            iterations=CascadeConfig().passes,
            messages=result.messages,
            parities_disclosed=result.parities_disclosed,
            bits_discarded=result.estimation_bits_discarded,
            final_key_len=final_len,
            qber_est=result.qber_estimate.qber_hat if result.qber_estimate else math.nan,
            compute_ms=compute_ms,
            simulated_latency_ms=latency,
            throughput_bps=_throughput(final_len, compute_ms, latency),
            success=result.residual_errors == 0,
            residual_errors=result.residual_errors,
        )
    raise ValueError(f"unknown protocol {protocol!r}")


def _run_cell(args) -> list[RunRecord]:
    protocol, n, qber, spec_dict = args
    spec = SweepSpec(**spec_dict)
    out = []
    for seed in range(spec.seeds):
        out.append(
            run_single(
                protocol,
                n,
                qber,
                seed,
                latency_ms=spec.latency_ms,
                error_model=spec.error_model,
                estimation_samples=spec.estimation_samples,
                qber_abort_threshold=spec.qber_abort_threshold,
                max_iterations=spec.max_iterations,
            )
        )
    return out


def run_sweep(
    spec: SweepSpec, out_path=None, workers: int = 1
) -> list[RunRecord]:
    """Run every cell of the spec; optionally write the CSV.

    Output ordering is by (protocol, n, qber, seed) regardless of worker
    completion order, and per-run aborts become rows, never crashes.
    """
    cells = spec.cells()
    args = [(p, n, q, spec.__dict__) for p, n, q in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_cell = list(pool.map(_run_cell, args))
    else:
        per_cell = [_run_cell(a) for a in args]
    records = [rec for cell in per_cell for rec in cell]
    records.sort(key=lambda r: (r.protocol, r.n, r.qber_true, r.seed))
    if out_path is not None:
        write_records(records, out_path)
    return records


def write_records(records: list[RunRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_row())


def read_records(path) -> list[RunRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}")
        return [RunRecord.from_row(row) for row in reader]


def iteration_histogram(
    records: list[RunRecord], n: int, protocol: str = "sardub19"
) -> dict[int, float]:
    """Fraction of successful runs of one key length ending at each iteration."""
    counts: dict[int, int] = {}
    total = 0
    for rec in records:
        if rec.n != n or rec.protocol != protocol or not rec.success:
            continue
        counts[rec.iterations] = counts.get(rec.iterations, 0) + 1
        total += 1
    if total == 0:
        raise ValueError(f"no successful {protocol} records at n={n}")
    return {it: counts[it] / total for it in sorted(counts)}


def format_histogram(hist: dict[int, float], n: int) -> str:
    """One table row: percentage of runs per iteration count."""
    cols = range(1, max(hist) + 1)
    cells = " ".join(f"{100 * hist.get(it, 0.0):6.2f}%" for it in cols)
    return f"n={n:<7d} iterations 1..{max(hist)}: {cells}"


def pearson_r(xs, ys) -> float:
    """Sample Pearson correlation; rejects degenerate inputs."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.size != y.size or x.size < 2:
        raise ValueError("need two equally sized samples of length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0:
        raise ValueError("undefined correlation: zero variance input")
    return float(xc @ yc) / denom


@dataclass
class CellSummary:
    protocol: str
    n: int
    qber_true: float
    runs: int
    success_rate: float
    mean_iterations: float
    mean_messages: float
    mean_parities_disclosed: float
    mean_bits_discarded: float
    mean_leaked_plus_discarded: float
    mean_compute_ms: float
    mean_throughput_bps: float
    mean_qber_est: float


@dataclass
class SummaryReport:
    cells: list[CellSummary] = field(default_factory=list)
    correlations: dict[tuple[str, int], float] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            "protocol n qber runs success mean_iter mean_msgs mean_parities "
            "mean_discard mean_leak+disc mean_ms mean_bps mean_qber_est"
        ]
        for c in self.cells:
            lines.append(
                f"{c.protocol} {c.n} {c.qber_true:.4f} {c.runs} "
                f"{c.success_rate:.3f} {c.mean_iterations:.2f} "
                f"{c.mean_messages:.1f} {c.mean_parities_disclosed:.1f} "
                f"{c.mean_bits_discarded:.1f} {c.mean_leaked_plus_discarded:.1f} "
                f"{c.mean_compute_ms:.3f} {c.mean_throughput_bps:.1f} "
                f"{c.mean_qber_est:.5f}"
            )
        for (protocol, n), r in sorted(self.correlations.items()):
            lines.append(f"estimation correlation {protocol} n={n}: r={r:.4f}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                [
                    "protocol", "n", "qber_true", "runs", "success_rate",
                    "mean_iterations", "mean_messages", "mean_parities_disclosed",
                    "mean_bits_discarded", "mean_leaked_plus_discarded",
                    "mean_compute_ms", "mean_throughput_bps", "mean_qber_est",
                ]
            )
            for c in self.cells:
                writer.writerow(
                    [
                        c.protocol, c.n, repr(c.qber_true), c.runs,
                        repr(c.success_rate), repr(c.mean_iterations),
                        repr(c.mean_messages), repr(c.mean_parities_disclosed),
                        repr(c.mean_bits_discarded),
                        repr(c.mean_leaked_plus_discarded),
                        repr(c.mean_compute_ms), repr(c.mean_throughput_bps),
                        repr(c.mean_qber_est),
                    ]
                )


def summarize(records: list[RunRecord]) -> SummaryReport:
    """Per-cell means plus per-(protocol, n) estimation correlation."""
    report = SummaryReport()
    by_cell: dict[tuple[str, int, float], list[RunRecord]] = {}
    for rec in records:
        by_cell.setdefault((rec.protocol, rec.n, rec.qber_true), []).append(rec)
    for (protocol, n, qber), recs in sorted(by_cell.items()):
        ok = [r for r in recs if r.success]
        mean = lambda vals: float(np.mean(vals)) if vals else math.nan
        report.cells.append(
            CellSummary(
                protocol=protocol,
                n=n,
                qber_true=qber,
                runs=len(recs),
                success_rate=len(ok) / len(recs),
                mean_iterations=mean([r.iterations for r in ok]),
                mean_messages=mean([r.messages for r in ok]),
                mean_parities_disclosed=mean([r.parities_disclosed for r in ok]),
                mean_bits_discarded=mean([r.bits_discarded for r in ok]),
                mean_leaked_plus_discarded=mean(
                    [r.parities_disclosed + r.bits_discarded for r in ok]
                ),
                mean_compute_ms=mean([r.compute_ms for r in ok]),
                mean_throughput_bps=mean([r.throughput_bps for r in ok]),
                mean_qber_est=mean(
                    [r.qber_est for r in ok if not math.isnan(r.qber_est)]
                ),
            )
        )
    by_pn: dict[tuple[str, int], list[RunRecord]] = {}
    for rec in records:
        if rec.success and not math.isnan(rec.qber_est):
            by_pn.setdefault((rec.protocol, rec.n), []).append(rec)
    for key, recs in by_pn.items():
        trues = [r.qber_true for r in recs]
        if len(recs) >= 2 and len(set(trues)) > 1:
            report.correlations[key] = pearson_r(
                trues, [r.qber_est for r in recs]
            )
    return report
