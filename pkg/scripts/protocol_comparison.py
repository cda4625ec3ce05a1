#!/usr/bin/env python3
"""Five-protocol comparison across failure probabilities.

Produces the robustness / delay / forwarding-load / energy grid for all
protocols at p_f in {0, 0.4, 0.8}; see out/<dir>/aggregate.csv and the
printed table.
"""

import argparse
import sys

from gradcast import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/protocol_comparison")
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--config", default=None)
    args = ap.parse_args()
    argv = ["sweep", "--out", args.out, "--seeds", str(args.seeds),
            "--jobs", str(args.jobs),
            "--set", "scenario.require_connected=true",
            "--axis", "scenario.protocol=BGB,GRAB,P-GRAB,U-GRAB,UP-GRAB",
            "--axis", "scenario.p_f=0,0.4,0.8"]
    if args.config:
        argv += ["--config", args.config]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
