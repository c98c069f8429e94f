"""Command line interface.

    cdem test   --input table.csv [options]   exact and asymptotic CDEM test
    cdem basis  R C [--minimal] [--count-only]
    cdem verify R C [--n-max N] [--types I,V] ...

Exit codes: 0 success, 1 verify found a disconnected fiber, 2 bad input
or arguments, 3 infeasible or degenerate table, 4 IPF did not converge,
5 an enumeration cap was hit.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _backend
from .basis import BASIS_TYPES, generate_basis
from .errors import FitError, ResourceLimitError, TableFormatError
from .fiber import random_stats, verify_connectivity, verify_fiber
from .fit import chi2_sf, fit_cdem, fit_qi, g2, test_df
from .mcmc import DEFAULT_SEED, RNG_ALGORITHM, ChainConfig, histogram, pooled_p, run_chain, run_chains
from .report import histogram_svg, write_histogram_csv, write_json, write_trace
from .table import MoveType, format_table, read_table

EXIT_OK, EXIT_DISCONNECTED, EXIT_USAGE, EXIT_DEGENERATE, EXIT_NONCONVERGED, EXIT_RESOURCE = range(6)


def _types(text: Optional[str]) -> Optional[list[MoveType]]:
    if not text:
        return None
    return [MoveType.parse(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdem", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test the common diagonal effect model on a table")
    t.add_argument("--input", required=True, help="CSV table, one row per line, no header")
    t.add_argument("--burn-in", type=int, default=8000)
    t.add_argument("--samples", type=int, default=10_000)
    t.add_argument("--thin", type=int, default=1)
    t.add_argument("--seed", type=int, default=DEFAULT_SEED)
    t.add_argument("--bins", type=int, default=50)
    t.add_argument("--minimal-basis", action="store_true")
    t.add_argument("--out-dir", default="out")
    t.add_argument("--no-svg", action="store_true")
    t.add_argument("--chains", type=int, default=1)
    t.add_argument("--tol", type=float, default=1e-8)
    t.add_argument("--max-iter", type=int, default=10_000)
    t.add_argument("--echo-input", action="store_true", help="write the parsed table to input.csv")

    b = sub.add_parser("basis", help="list the Markov basis for R x C tables")
    b.add_argument("rows", type=int)
    b.add_argument("cols", type=int)
    b.add_argument("--minimal", action="store_true")
    b.add_argument("--count-only", action="store_true")
    b.add_argument("--types", help="comma-separated subset of I,II,III,IV,V,VI")

    v = sub.add_parser("verify", help="check that the basis connects every small fiber")
    v.add_argument("rows", type=int)
    v.add_argument("cols", type=int)
    v.add_argument("--n-max", type=int, default=10)
    v.add_argument("--minimal", action="store_true")
    v.add_argument("--types", help="comma-separated subset of I,II,III,IV,V,VI")
    v.add_argument("--degree-two", action="store_true", help="use only the degree-two (Type I) moves")
    v.add_argument("--structural-zero-diagonal", action="store_true",
                   help="only tables with an all-zero diagonal")
    v.add_argument("--random", type=int, default=0, metavar="K",
                   help="check K random fibers instead of all of them")
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)
    v.add_argument("--max-witnesses", type=int, default=10)
    v.add_argument("--table-cap", type=int, default=50_000_000)
    return p


def _fmt_rows(t) -> str:
    return " / ".join(" ".join(str(v) for v in row) for row in t.tolist())


def cmd_basis(args) -> int:
    if args.rows < 2 or args.cols < 2:
        print("error: R and C must both be at least 2", file=sys.stderr)
        return EXIT_USAGE
    basis = generate_basis(args.rows, args.cols, minimal=args.minimal, types=_types(args.types))
    if args.count_only:
        for tag, k in basis.counts().items():
            print(f"{tag}: {k}")
        print(f"total: {len(basis)}")
    else:
        for line in basis.to_lines():
            print(line)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.rows < 2 or args.cols < 2 or args.n_max < 0:
        print("error: need R, C >= 2 and n-max >= 0", file=sys.stderr)
        return EXIT_USAGE
    types = [MoveType.I] if args.degree_two else _types(args.types)
    basis = generate_basis(args.rows, args.cols, minimal=args.minimal, types=types)
    label = ",".join(str(t) for t in (types or BASIS_TYPES))
    try:
        if args.random:
            rng = np.random.Generator(np.random.PCG64(args.seed))
            witnesses, checked = [], 0
            for stat in random_stats(args.rows, args.cols, args.n_max, args.random, rng):
                checked += 1
                w = verify_fiber(stat, basis)
                if w is not None:
                    witnesses.append(w)
            print(f"{args.rows}x{args.cols}, types {label}: {checked} random fibers with n <= {args.n_max}")
        else:
            report = verify_connectivity(basis, args.n_max, structural_zero_diagonal=args.structural_zero_diagonal,
                                         table_cap=args.table_cap)
            witnesses = report.witnesses
            print(f"types {label}: " + report.summary())
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    if not witnesses:
        print("connected: all fibers")
        return EXIT_OK
    print(f"disconnected fibers: {len(witnesses)}")
    for a, b in witnesses[: args.max_witnesses]:
        print(f"  {_fmt_rows(a)}  <-/->  {_fmt_rows(b)}")
    return EXIT_DISCONNECTED


def cmd_test(args) -> int:
    start = time.perf_counter()
    try:
        x = read_table(args.input)
    except (OSError, TableFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    R, C = x.shape
    if min(R, C) < 2 or x.total == 0:
        print(f"error: need min(R, C) >= 2 and a positive total, got {R}x{C} with n = {x.total}",
              file=sys.stderr)
        return EXIT_DEGENERATE
    try:
        config = ChainConfig(burn_in=args.burn_in, samples=args.samples, thin=args.thin, seed=args.seed,
                             basis_minimal=args.minimal_basis, tol=args.tol, max_iter=args.max_iter)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.chains < 1 or args.bins < 1:
        print("error: --chains and --bins must be positive", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []
    df = test_df(R, C)
    qi, cd = fit_qi(x, args.tol, args.max_iter), fit_cdem(x, args.tol, args.max_iter)
    summary = {
        "input": str(args.input),
        "rows": R,
        "cols": C,
        "n": x.total,
        "observed_g2": None,
        "df": df,
        "asymptotic_p": None,
        "mcmc_p": None,
        "samples": config.samples,
        "burn_in": config.burn_in,
        "thin": config.thin,
        "seed": config.seed,
        "acceptance_rate": None,
        "chains": args.chains,
        "per_chain_p": [],
        "proposals_rejected_negative": None,
        "nonconverged_samples": None,
        "undefined_samples": None,
        "basis_size": None,
        "basis_minimal": config.basis_minimal,
        "rng": RNG_ALGORITHM,
        "backend": _backend.name(),
        "qi_converged": qi.converged,
        "cdem_converged": cd.converged,
        "qi_fitted": qi.expected.tolist(),
        "cdem_fitted": cd.expected.tolist(),
        "note": "",
    }

    def finish(code: int) -> int:
        write_json(out / "summary.json", summary)
        written.append(str(out / "summary.json"))
        manifest = {
            "input": str(args.input),
            "dimensions": [R, C],
            "config": {
                "burn_in": config.burn_in, "samples": config.samples, "thin": config.thin,
                "seed": config.seed, "basis_minimal": config.basis_minimal, "chains": args.chains,
                "bins": args.bins, "tol": config.tol, "max_iter": config.max_iter,
            },
            "outputs": written + [str(out / "manifest.json")],
            "wall_clock_seconds": time.perf_counter() - start,
            "exit_code": code,
        }
        write_json(out / "manifest.json", manifest)
        return code

    if args.echo_input:
        (out / "input.csv").write_text(format_table(x))
        written.append(str(out / "input.csv"))
    if not (qi.converged and cd.converged):
        summary["note"] = "IPF did not converge on the observed table; no Monte Carlo test was run"
        print(f"error: {summary['note']}", file=sys.stderr)
        return finish(EXIT_NONCONVERGED)
    observed = g2(x, qi, cd)
    summary["observed_g2"] = observed
    summary["asymptotic_p"] = chi2_sf(max(observed, 0.0), df)

    try:
        results = run_chains(x, config, args.chains) if args.chains > 1 else [run_chain(x, config)]
    except FitError as exc:
        summary["note"] = str(exc)
        return finish(EXIT_NONCONVERGED)
    trace = np.concatenate([r.g2_trace for r in results])
    basis_size = len(generate_basis(R, C, minimal=config.basis_minimal))
    summary.update(
        mcmc_p=pooled_p(results),
        acceptance_rate=float(np.mean([r.acceptance_rate for r in results])),
        per_chain_p=[r.p_estimate for r in results],
        proposals_rejected_negative=sum(r.proposals_rejected_negative for r in results),
        nonconverged_samples=sum(r.nonconverged for r in results),
        undefined_samples=sum(r.undefined for r in results),
        basis_size=basis_size,
    )
    if basis_size == 0:
        summary["note"] = ("empty Markov basis: every fiber is a single table (saturated model), "
                           "so the exact p-value is 1")

    write_trace(out / "trace.csv", trace)
    written.append(str(out / "trace.csv"))
    hist = histogram(trace, args.bins, observed=observed)
    write_histogram_csv(out / "histogram.csv", hist, df)
    written.append(str(out / "histogram.csv"))
    if not args.no_svg:
        title = f"G2 under CDEM, {R}x{C} table (chi-squared, {df} df)"
        (out / "histogram.svg").write_text(histogram_svg(hist, df, observed, title))
        written.append(str(out / "histogram.svg"))

    verdict = "rejected" if summary["mcmc_p"] < 0.05 else "not rejected"
    print(f"G2 = {observed:.6g} (df {df}); asymptotic p = {summary['asymptotic_p']:.6g}; "
          f"MCMC p = {summary['mcmc_p']:.6g}; CDEM {verdict} at 5%")
    if summary["note"]:
        print(summary["note"])
    return finish(EXIT_OK)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"test": cmd_test, "basis": cmd_basis, "verify": cmd_verify}[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
