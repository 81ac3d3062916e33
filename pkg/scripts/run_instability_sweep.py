#!/usr/bin/env python3
"""Near-constant blow-up data: smallness vs linear divergence as p -> 1.

Writes instability_p{p}.csv per value of p under out/instability/.
As p -> 1 the initial data approach the spatially homogeneous family while
the divergence slope |p-1|*sqrt(2) stays strictly positive.
"""

import argparse
import sys

from blowuplab.cli import main


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, nargs="+",
                    default=[0.9, 0.99, 0.999, 0.9999])
    args = ap.parse_args(argv)
    worst = 0
    for p in args.p:
        rc = main(["instability-p1", "--p", str(p),
                   "--output-dir", "out/instability"])
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(run())
