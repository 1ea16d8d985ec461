"""Regenerate the two-state trade-off data and print the operating points.

Thin wrapper over ``secisac reproduce-fig2``; pass ``--resolution`` to trade
accuracy for speed.
"""

import argparse
import json
import sys

from secisac.cli import main as cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="fig2/fig2")
    ap.add_argument("--resolution", type=int, default=100)
    ap.add_argument("--rho-points", type=int, default=11)
    args = ap.parse_args()
    sweep = json.dumps({"resolution": args.resolution, "rho_grid": args.rho_points})
    code = cli(["reproduce-fig2", "--sweep", sweep, "--out", args.out])
    sys.exit(code)


if __name__ == "__main__":
    main()
