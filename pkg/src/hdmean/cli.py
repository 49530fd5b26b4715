"""Command line interface: ``hdmean test-one | test-two | simulate | screen``.

Exit status reports operational success only.  A run that retains or rejects
H0 exits 0 either way; input, data and configuration problems exit 1 (2 for
usage errors) with a JSON error object on stderr.
"""

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .campaign import format_table, load_campaign, run_campaign, write_outputs
from .errors import ConfigError, HDMeanError, InsufficientSampleError
from .one_sample import one_sample_test
from .two_sample import two_sample_test

__all__ = ["CsvDataset", "read_csv_matrix", "bonferroni", "screen_units", "main"]


class InputError(HDMeanError, ValueError):
    """Unreadable or malformed input file."""


@dataclass
class CsvDataset:
    path: Path
    matrix: np.ndarray
    delimiter: str = ","
    header: bool = False
    columns: list = field(default_factory=list)


def read_csv_matrix(path, delimiter=",", header=False):
    """Parse a CSV of finite reals (rows = observations) into a CsvDataset."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in row)]
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from exc
    columns = []
    if header and rows:
        columns = [c.strip() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: no data rows")
    width = len(rows[0])
    offset = 2 if header else 1
    data = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{path}: row {i + offset} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                hint = " (use --header if the file has a header row)" if i == 0 and not header else ""
                raise InputError(
                    f"{path}: row {i + offset}, column {j + 1}: cannot parse {cell.strip()!r} as a number{hint}"
                ) from None
            if not math.isfinite(value):
                raise InputError(f"{path}: row {i + offset}, column {j + 1}: value {cell.strip()!r} is not finite")
            data[i, j] = value
    return CsvDataset(path, data, delimiter, header, columns)


def bonferroni(p_values, alpha):
    """Per-hypothesis decisions ``p < alpha / m``; ``None`` entries never reject."""
    m = len(p_values)
    threshold = alpha / m
    return [p is not None and p < threshold for p in p_values], threshold


def _read_manifest(path, delimiter):
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh, delimiter=delimiter) if any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"{path}: cannot read manifest ({exc.strerror})") from exc
    if rows and [c.strip().lower() for c in rows[0]] == ["unit", "group1", "group2"]:
        rows = rows[1:]
    if not rows:
        raise InputError(f"{path}: manifest lists no units")
    units = []
    for i, row in enumerate(rows, start=1):
        if len(row) != 3:
            raise InputError(f"{path}: manifest line {i} must have 3 fields (unit, group1, group2)")
        name, g1, g2 = (c.strip() for c in row)
        units.append((name, path.parent / g1, path.parent / g2))
    return units


def screen_units(units, alpha=0.05, delimiter=",", header=False):
    """Two-sample test per unit, Bonferroni decisions at family level ``alpha``.

    ``units`` is a list of ``(name, csv1, csv2)``.  A unit whose data fail
    the test's preconditions is reported with its error and never rejects;
    it still counts towards ``m``.
    """
    entries = []
    for name, path1, path2 in units:
        entry = {"unit": name, "p_value": None, "t_stat": None, "df": None, "error": None}
        try:
            X1 = read_csv_matrix(path1, delimiter, header).matrix
            X2 = read_csv_matrix(path2, delimiter, header).matrix
            out = two_sample_test(X1, X2, alpha)
            entry.update(p_value=out.p_value, t_stat=out.t_stat, df=out.df, n1=out.n1, n2=out.n2, swapped=out.swapped)
        except (HDMeanError, ValueError) as exc:
            entry["error"] = f"{type(exc).__name__}: {exc}"
        entries.append(entry)
    decisions, threshold = bonferroni([e["p_value"] for e in entries], alpha)
    for entry, decision in zip(entries, decisions):
        entry["reject"] = decision
    entries.sort(key=lambda e: (e["p_value"] is None, e["p_value"] if e["p_value"] is not None else 0.0, e["unit"]))
    return {"alpha": alpha, "m": len(entries), "threshold": threshold, "units": entries}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


def _emit(report, output):
    text = _dump(report) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _delimiter(value):
    if value in ("\\t", "tab"):
        return "\t"
    if len(value) != 1:
        raise argparse.ArgumentTypeError("delimiter must be a single character")
    return value


def _alpha(value):
    alpha = float(value)
    if not 0.0 < alpha < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return alpha


def cmd_test_one(args):
    data = read_csv_matrix(args.csv, args.delimiter, args.header)
    if data.matrix.shape[0] < 3:
        raise InsufficientSampleError(
            f"{data.path}: the one-sample test needs n >= 3 observations (rows), got {data.matrix.shape[0]}"
        )
    _emit(one_sample_test(data.matrix, args.alpha).to_dict(), args.output)
    return 0


def cmd_test_two(args):
    d1 = read_csv_matrix(args.csv1, args.delimiter, args.header)
    d2 = read_csv_matrix(args.csv2, args.delimiter, args.header)
    w1, w2 = d1.matrix.shape[1], d2.matrix.shape[1]
    if w1 != w2:
        raise InputError(f"column counts differ: {d1.path} has {w1} columns, {d2.path} has {w2}")
    _emit(two_sample_test(d1.matrix, d2.matrix, args.alpha).to_dict(), args.output)
    return 0


def cmd_simulate(args):
    overrides = {"reps": args.reps, "seed": args.seed, "alpha": args.alpha, "workers": args.workers}
    campaign = load_campaign(args.config, overrides)

    def progress(cell):
        if not args.quiet:
            print(f"done: {cell.config.label()} ({cell.runtime:.1f}s)", file=sys.stderr)

    result = run_campaign(campaign, progress=progress)
    paths = write_outputs(result, args.output)
    if not args.quiet:
        sys.stdout.write(format_table(result))
        for kind, path in paths.items():
            print(f"wrote {path}", file=sys.stderr)
    return 0


def cmd_screen(args):
    units = _read_manifest(args.manifest, args.delimiter)
    _emit(screen_units(units, args.alpha, args.delimiter, args.header), args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hdmean", description="Finite-sample t-tests for high-dimensional mean vectors."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_flags(p):
        p.add_argument("--alpha", type=_alpha, default=0.05, help="significance level (default 0.05)")
        p.add_argument("--delimiter", type=_delimiter, default=",", help="CSV field delimiter (default ',')")
        p.add_argument("--header", action="store_true", help="CSV files start with a header row")
        p.add_argument("--output", help="write the JSON report to this file instead of stdout")

    p1 = sub.add_parser("test-one", help="one-sample test of H0: mu = 0")
    p1.add_argument("csv")
    data_flags(p1)
    p1.set_defaults(func=cmd_test_one)

    p2 = sub.add_parser("test-two", help="two-sample test of H0: mu1 = mu2")
    p2.add_argument("csv1")
    p2.add_argument("csv2")
    data_flags(p2)
    p2.set_defaults(func=cmd_test_two)

    ps = sub.add_parser("simulate", help="run a Monte Carlo campaign from a TOML config")
    ps.add_argument("config")
    ps.add_argument("--output", default="sim-output", help="output directory (default ./sim-output)")
    ps.add_argument("--reps", type=int, help="override the replication count")
    ps.add_argument("--seed", type=int, help="override the master seed")
    ps.add_argument("--alpha", type=_alpha, help="override the significance level")
    ps.add_argument("--workers", type=int, help="number of worker processes")
    ps.add_argument("--quiet", action="store_true", help="suppress the table and progress output")
    ps.set_defaults(func=cmd_simulate)

    pm = sub.add_parser("screen", help="per-unit two-sample tests with Bonferroni correction")
    pm.add_argument("manifest", help="CSV manifest: unit,group1,group2 (paths relative to the manifest)")
    data_flags(pm)
    pm.set_defaults(func=cmd_screen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(_dump({"error": {"type": "ConfigError", "message": str(exc)}}), file=sys.stderr)
        return 2
    except (HDMeanError, ValueError) as exc:
        print(_dump({"error": {"type": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
