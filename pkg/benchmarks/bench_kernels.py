"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--steps 100000]

Each kernel runs on the same inputs under both backends; the table
reports the best wall-clock time in milliseconds of ``--repeat`` runs and the speedup.
"""
import argparse
import time
from pathlib import Path

from cdem import _backend, fit_cdem, fit_qi, generate_basis, read_table
from cdem.fiber import verify_connectivity
from cdem.mcmc import sample_tables

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(steps):
    t1, t3 = read_table(DATA / "table1.csv"), read_table(DATA / "table3.csv")
    b4, b12 = generate_basis(4, 4), generate_basis(12, 12)
    b34 = generate_basis(3, 4)
    return [
        (f"walk 4x4, {steps} steps", lambda: sample_tables(t1, b4, 0, steps, seed=1)),
        (f"walk 12x12, {steps} steps", lambda: sample_tables(t3, b12, 0, steps, seed=1)),
        ("IPF CDEM + QI, table 1", lambda: (fit_cdem(t1), fit_qi(t1))),
        ("IPF CDEM + QI, 12x12", lambda: (fit_cdem(t3), fit_qi(t3))),
        ("connectivity 3x4, n <= 7", lambda: verify_connectivity(b34, 7)),
    ]


def main():
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--steps", type=int, default=100_000)
    args = p.parse_args()
    if not _backend.has_compiled():
        raise SystemExit("the compiled extension is not built; run pip install -e . --no-build-isolation")
    print(f"{'kernel':<30} {'python (ms)':>12} {'compiled (ms)':>14} {'speedup':>9}")
    for label, fn in cases(args.steps):
        timing = {}
        for which in ("python", "compiled"):
            previous = _backend.use(which)
            try:
                timing[which] = best_of(fn, args.repeat)
            finally:
                _backend.use(previous)
        ratio = timing["python"] / timing["compiled"]
        print(f"{label:<30} {1e3 * timing['python']:>12.3f} {1e3 * timing['compiled']:>14.3f} {ratio:>8.1f}x")


if __name__ == "__main__":
    main()
