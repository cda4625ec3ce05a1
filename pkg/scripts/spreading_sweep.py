#!/usr/bin/env python3
"""Spreading-factor sweep for the probabilistic policy: flatter conversion
curves trade extra forwards for little robustness."""

import argparse
import sys

from gradcast import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/spreading_sweep")
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--config", default=None)
    args = ap.parse_args()
    argv = ["sweep", "--out", args.out, "--seeds", str(args.seeds),
            "--jobs", str(args.jobs),
            "--set", "scenario.require_connected=true",
            "--axis", "scenario.protocol=P-GRAB",
            "--axis", "policies.spread_factor=1,2,4,8,16",
            "--axis", "scenario.p_f=0,0.4,0.8"]
    if args.config:
        argv += ["--config", args.config]
    return cli.main(argv)


if __name__ == "__main__":
    sys.exit(main())
