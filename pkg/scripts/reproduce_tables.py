"""Regenerate every table and figure dataset into one output directory.

    python scripts/reproduce_tables.py --out out/all --years 1

Equivalent to running the ``table1``, ``table2``, ``table3``, ``fig4`` and
``placement`` subcommands one after another.
"""

import argparse
import sys
import time

from consip.cli import main


def run_all(out: str, years: float, seed: int, jobs: int) -> int:
    common = ["--duration-years", str(years), "--seed", str(seed), "--jobs", str(jobs), "--force"]
    for cmd in ("table1", "table2", "table3", "fig4", "placement"):
        t0 = time.perf_counter()
        print(f"== {cmd}", flush=True)
        rc = main([cmd, "--out", f"{out}/{cmd}", *common])
        print(f"   ({time.perf_counter() - t0:.1f} s)", flush=True)
        if rc:
            return rc
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="out/all")
    ap.add_argument("--years", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    a = ap.parse_args()
    sys.exit(run_all(a.out, a.years, a.seed, a.jobs))
