#!/usr/bin/env python3
"""Run every sweep in scripts/configs and write CSV tables to results/.

    python3 scripts/run_experiments.py                 # all
    python3 scripts/run_experiments.py bounds condensate
"""

import argparse
import sys
import time
from pathlib import Path

from pairwire import cli

HERE = Path(__file__).resolve().parent
COMMAND_OF = {
    "spectrum1d": "spectrum1d",
    "bounds": "bounds",
    "alpha_sweep": "alpha-sweep",
    "count_vs_L": "count-vs-L",
    "condensate": "condensate",
    "trace_probe": "trace-probe",
}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("names", nargs="*", metavar="NAME", help=f"any of {', '.join(COMMAND_OF)}")
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()
    unknown = set(args.names) - set(COMMAND_OF)
    if unknown:
        parser.error(f"unknown sweep(s): {', '.join(sorted(unknown))}")
    worst = 0
    for name in args.names or COMMAND_OF:
        out = Path(args.out_dir) / f"{name}.csv"
        t0 = time.perf_counter()
        code = cli.main([COMMAND_OF[name], "--config", str(HERE / "configs" / f"{name}.cfg"), "--out", str(out)])
        print(f"{name:12s} exit {code}  {time.perf_counter() - t0:7.1f} s  -> {out}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
