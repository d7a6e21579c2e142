"""Command line interface.

Subcommands:

* ``theory``    -- tabulate the predicted clustering curve as CSV;
* ``simulate``  -- run replicates and write the pooled clustering spectrum;
* ``compare``   -- simulate and diff against the predictions (full report);
* ``fit-delta`` -- log-log slope of a two-column CSV within a degree window;
* ``stats``     -- clustering spectrum of an external edge list.

Exit codes: 0 success, 1 usage error, 2 malformed data, 3 budget abort.
"""

from __future__ import annotations

import argparse
import csv
import sys

from .experiment import (
    UsageError,
    build_config,
    config_hash,
    fit_delta,
    read_config,
    run,
)
from .graphgen import EdgeBudgetError
from .spectrum import DataFormatError, clustering_spectrum  # noqa: F401  (re-export for users)
from .spectrum import read_edge_list, write_spectrum_csv
from .theory import is_pareto_pair, theory_curve

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BUDGET = 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        raise UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    for key in ("n", "m", "replicates", "master-seed", "k-min", "k-max",
                "pmf-k-max", "edge-budget"):
        p.add_argument(f"--{key}", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--x-law")
    p.add_argument("--y-law")
    p.add_argument("--generator", choices=["reference", "fast"])
    p.add_argument("--save-replicates", action="store_true", default=None)
    p.add_argument("--output-dir", "-o")


def _config_from_args(args) -> "ExperimentConfig":
    values = read_config(args.config) if args.config else {}
    for key in ("n", "m", "beta", "x_law", "y_law", "replicates", "master_seed",
                "k_min", "k_max", "pmf_k_max", "tol", "generator",
                "edge_budget", "save_replicates", "output_dir"):
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            values[key] = flag_val
    return build_config(values)


def _cmd_theory(args) -> int:
    config = _config_from_args(args)
    rows = theory_curve(config.params, range(config.k_min, config.k_max + 1),
                        config.pmf_k_max, config.tol)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        out.write("k,a,b,A_lo,A_hi,B_lo,B_hi,c_pred,C_pred_lo,C_pred_hi\n")
        for r in rows:
            cells = [str(r.k)]
            for v in (r.a, r.b, r.A.lo, r.A.hi, r.B.lo, r.B.hi,
                      r.c_pred, r.C_pred.lo, r.C_pred.hi):
                cells.append("" if v is None else repr(float(v)))
            out.write(",".join(cells) + "\n")
    finally:
        if args.out:
            out.close()
    if is_pareto_pair(config.params):
        from .theory import delta_exponent
        try:
            d = delta_exponent(config.params.x_law.tail_index,
                               config.params.y_law.tail_index)
            if d < 0:
                print(f"note: tail-weight exponent delta = {d:g} is negative "
                      "(clustering grows with k at large degrees)", file=sys.stderr)
        except ValueError:
            pass
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = _config_from_args(args)
    report = run(config, workers=args.workers)
    target = args.out or (config.output_dir and
                          f"{config.output_dir}/pooled_spectrum.csv")
    if target:
        write_spectrum_csv(report.pooled, target)
    else:
        write_spectrum_csv(report.pooled, sys.stdout)
    if report.failed:
        print(f"warning: {len(report.failed)} replicate(s) aborted on the edge budget",
              file=sys.stderr)
    return EXIT_OK


def _cmd_compare(args) -> int:
    config = _config_from_args(args)
    if not config.output_dir:
        raise UsageError("compare needs --output-dir (or output_dir in the config)")
    report = run(config, workers=args.workers)
    gaps = [r["C_gap"] for r in report.rows if r["C_gap"] is not None]
    print(f"config {config_hash(config)[:12]}: "
          f"{config.replicates - len(report.failed)}/{config.replicates} replicates, "
          f"max |C_hat - C_pred| = {max(gaps):.4f}" if gaps else "no overlapping degrees")
    if report.delta_fit is not None:
        line = (f"fitted delta = {report.delta_fit.slope:+.3f} "
                f"(r^2 = {report.delta_fit.r_squared:.3f}, "
                f"window {report.delta_window})")
        if report.delta_theory is not None:
            line += f", theory delta = {report.delta_theory:+.3f}"
        print(line)
    if report.delta_negative:
        print("note: theoretical delta is negative for these laws", file=sys.stderr)
    return EXIT_OK


def _cmd_fit_delta(args) -> int:
    try:
        with open(args.csv, "r", encoding="utf-8", newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header is None:
                raise DataFormatError(f"{args.csv}: empty file")
            try:
                ki = header.index(args.k_col) if args.k_col else 0
                vi = header.index(args.value_col) if args.value_col else 1
                rows = list(reader)
            except ValueError:
                raise DataFormatError(
                    f"{args.csv}: no columns {args.k_col!r}/{args.value_col!r}")
            points = []
            for row in rows:
                if not row or len(row) <= max(ki, vi) or not row[vi].strip():
                    continue
                try:
                    points.append((float(row[ki]), float(row[vi])))
                except ValueError as exc:
                    raise DataFormatError(f"{args.csv}: non-numeric row {row!r}") from exc
    except OSError as exc:
        raise DataFormatError(f"cannot read {args.csv}: {exc}") from exc
    try:
        fit = fit_delta(points, (args.window[0], args.window[1]))
    except ValueError as exc:
        raise DataFormatError(str(exc)) from exc
    print(f"slope={fit.slope!r} intercept={fit.intercept!r} "
          f"r_squared={fit.r_squared!r} n={len(points)}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    try:
        graph = read_edge_list(args.edges)
    except OSError as exc:
        raise DataFormatError(f"cannot read {args.edges}: {exc}") from exc
    if graph.n == 0:
        print(f"warning: {args.edges} contains no edges", file=sys.stderr)
    spec = clustering_spectrum(graph)
    if args.out:
        write_spectrum_csv(spec, args.out)
    else:
        write_spectrum_csv(spec, sys.stdout)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="rigclust", description=__doc__.split("\n", 1)[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", help="tabulate predicted clustering")
    _add_config_flags(p)
    p.add_argument("--out", help="CSV destination (default stdout)")
    p.set_defaults(fn=_cmd_theory)

    p = sub.add_parser("simulate", help="run replicates, write pooled spectrum")
    _add_config_flags(p)
    p.add_argument("--out", help="CSV destination (default stdout/output_dir)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("compare", help="simulate and compare against theory")
    _add_config_flags(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("fit-delta", help="log-log slope of a k,value CSV")
    p.add_argument("csv")
    p.add_argument("--window", nargs=2, type=float, required=True,
                   metavar=("LO", "HI"))
    p.add_argument("--k-col", help="column name for k (default: first column)")
    p.add_argument("--value-col", help="column name for values (default: second)")
    p.set_defaults(fn=_cmd_fit_delta)

    p = sub.add_parser("stats", help="clustering spectrum of an edge list")
    p.add_argument("--edges", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_stats)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EdgeBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except OSError as exc:
        # Any file error the subcommands did not wrap themselves: fail with a
        # clean line rather than a traceback.
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
