#!/usr/bin/env python3
"""Sweep the nearest-neighbor pairwise phase against cavity-qubit detuning.

Reproduces the suppression curve: at large detuning the cavity modes are
only virtually excited and the accumulated phase collapses.  Writes
gamma_vs_delta.csv into --out via the package CLI.
"""

import argparse
import sys

from cavitycluster.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/detuning", help="output directory")
    ap.add_argument("--config", default=None, help="optional INI config")
    args = ap.parse_args()
    argv = ["gamma-sweep", "--out", args.out]
    if args.config:
        argv += ["--config", args.config]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
