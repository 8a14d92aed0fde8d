"""Small head-to-head benchmark sweep with aggregate statistics.

Runs both protocols over a grid of QBER values with deterministic
per-run seeds, prints the iteration-count histogram and the per-cell
summary table, and reports the correlation between true and estimated
QBER.  A full-size sweep is available from the command line:

    sardub19 sweep --out sweep.csv --seeds 1000
"""

from sardub19.bench import (
    SweepSpec,
    format_histogram,
    iteration_histogram,
    run_sweep,
    summarize,
)


def main() -> None:
    spec = SweepSpec(
        n_values=(1000,),
        qber_values=(0.01, 0.03, 0.05, 0.08, 0.10),
        seeds=50,
    )
    print(f"running {len(spec.cells()) * spec.seeds} seeded sessions ...")
    records = run_sweep(spec)

    print()
    print("iteration-count distribution (block-discard protocol):")
    print(format_histogram(iteration_histogram(records, 1000), 1000))

    print()
    print(summarize(records).to_text())


if __name__ == "__main__":
    main()
