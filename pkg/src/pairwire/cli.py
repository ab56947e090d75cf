"""Command-line entry point: ``pairwire <subcommand> [options]``.

Exit codes: 0 success, 2 invalid config, 3 numerical non-convergence,
4 a verification check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .eigensolver import ConvergenceError
from .experiments import COMMANDS, Table
from .onedim import BracketError

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_CHECK = 0, 2, 3, 4

OVERRIDES = ("alpha", "d", "L", "m", "beta", "rho", "k", "tol", "seed", "threads", "out")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if not math.isfinite(v) else f"{v:.17g}"
    return str(v)


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    if not table.rows:
        return ""
    writer = csv.writer(buf, lineterminator="\n")
    keys = list(table.rows[0])
    writer.writerow(keys)
    for row in table.rows:
        writer.writerow([format_value(row[k]) for k in keys])
    return buf.getvalue()


def _json_value(v):
    if isinstance(v, float):
        # 17 significant digits; non-finite values as strings since JSON has none.
        return float(f"{v:.17g}") if math.isfinite(v) else repr(v)
    return v


def to_jsonl(table: Table) -> str:
    return "".join(
        json.dumps({"command": table.name, **{k: _json_value(v) for k, v in row.items()}}) + "\n"
        for row in table.rows
    )


def write_table(table: Table, out: str, fmt: str | None = None) -> None:
    if fmt is None:
        fmt = "jsonl" if out.endswith((".jsonl", ".json")) else "csv"
    text = to_jsonl(table) if fmt == "jsonl" else to_csv(table)
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pairwire", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--format", choices=("csv", "jsonl"))
        for key in OVERRIDES:
            p.add_argument(f"--{key}", dest=f"set_{key}", metavar=key.upper())
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key, e.g. --set n_max=5")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    overrides = {}
    try:
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
            overrides[key.strip()] = value
        overrides.update({k: getattr(args, f"set_{k}") for k in OVERRIDES if getattr(args, f"set_{k}") is not None})
        cfg = load_config(args.config, overrides)
    except ConfigError as err:
        print(f"pairwire: invalid config: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = COMMANDS[args.command](cfg)
    except (ConvergenceError, BracketError, ArithmeticError) as err:
        print(f"pairwire: numerical failure: {err}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, MemoryError) as err:
        print(f"pairwire: invalid config: {err}", file=sys.stderr)
        return EXIT_CONFIG
    write_table(table, cfg.out, args.format)
    for msg in table.failures:
        print(f"pairwire: check failed: {msg}", file=sys.stderr)
    return EXIT_CHECK if table.failures else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
