#!/usr/bin/env python3
"""Run every law suite the CLI knows and print a one-line verdict per suite.

Reports land as JSON next to --outdir (default: ./reports).  Exit status is
nonzero if any suite fails, so this doubles as a smoke check in CI.
"""

import argparse
import json
import sys
import time
from pathlib import Path

from polydyn.cli import _SUITES, main as cli_main


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="reports", help="where JSON reports go")
    parser.add_argument(
        "--suite", choices=_SUITES, help="run just this suite instead of all"
    )
    args = parser.parse_args(argv)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    suites = [args.suite] if args.suite else list(_SUITES)
    worst = 0
    for suite in suites:
        path = outdir / f"{suite}.json"
        start = time.perf_counter()
        code = cli_main(["check", "--suite", suite, "--out", str(path)])
        elapsed = time.perf_counter() - start
        report = json.loads(path.read_text())
        n = len(report.get("checks", []))
        status = "ok" if code == 0 else "FAIL"
        print(f"{suite:<10} {status:<5} {n} check(s)  {elapsed:6.2f}s  -> {path}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
