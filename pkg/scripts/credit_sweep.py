#!/usr/bin/env python3
"""Credit-factor sweep: how much initial credit the budget policy needs as
failures rise, with the plain flood as the reference."""

import argparse
import sys

from gradcast import cli


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/credit_sweep")
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--config", default=None)
    args = ap.parse_args()
    base = ["--seeds", str(args.seeds), "--jobs", str(args.jobs),
            "--set", "scenario.require_connected=true"]
    if args.config:
        base += ["--config", args.config]
    rc = cli.main(["sweep", "--out", f"{args.out}/grab",
                   "--axis", "scenario.protocol=GRAB",
                   "--axis", "policies.credit_factor=1,5,10,20",
                   "--axis", "scenario.p_f=0,0.4,0.8"] + base)
    if rc != 0:
        return rc
    return cli.main(["sweep", "--out", f"{args.out}/bgb",
                     "--axis", "scenario.protocol=BGB",
                     "--axis", "scenario.p_f=0,0.4,0.8"] + base)


if __name__ == "__main__":
    sys.exit(main())
