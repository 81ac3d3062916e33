#!/usr/bin/env python3
"""Run every verification suite and collect artifacts under out/full/.

Each subcommand writes its CSVs plus a manifest into its own directory, so
a failing suite never clobbers the artifacts of a passing one.
"""

import sys

from blowuplab.cli import COMMANDS, main

OUT = "out/full"


def run() -> int:
    worst = 0
    for cmd in COMMANDS:
        if cmd == "all":
            continue
        print(f"=== {cmd} ===", flush=True)
        rc = main([cmd, "--output-dir", f"{OUT}/{cmd}"])
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(run())
