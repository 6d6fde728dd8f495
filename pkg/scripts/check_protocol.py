"""Exhaustive check over a set of exchange scripts, then a randomized soak.

    python scripts/check_protocol.py --horizon 10 --exchanges 100000
"""

import argparse
import sys
import time

from consip.verifier import MUTANTS, ExchangeScript, random_soak, verify

SCRIPTS = (
    "request@0",
    "request@0,abort@2",
    "request@0,request@2",
    "request@0,abort@1,request@3",
    "request@1,request@3,abort@5",
)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--horizon", type=int, default=8)
    ap.add_argument("--exchanges", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    a = ap.parse_args()

    failed = False
    for text in SCRIPTS:
        t0 = time.perf_counter()
        res = verify(a.horizon, ExchangeScript.parse(text))
        status = "ok" if res.ok else f"VIOLATION {res.counterexample.reason}"
        print(f"{text:32s} {res.paths:7d} paths {res.distinct_states:4d} states  {time.perf_counter() - t0:6.2f} s  {status}")
        failed |= not res.ok

    # sanity: the checker must catch a receiver that skips double listening
    for name, fn in MUTANTS.items():
        res = verify(min(a.horizon, 6), rx_transition=fn)
        caught = "caught" if not res.ok else "NOT CAUGHT"
        print(f"mutant {name}: {caught}" + ("" if res.ok else f" ({' '.join(o.value for o in res.counterexample.outcomes)})"))
        failed |= res.ok

    for ef, ea in ((None, None), (0.9, 0.9)):
        t0 = time.perf_counter()
        res = random_soak(a.exchanges, a.seed, eps_f=ef, eps_a=ea)
        label = "default losses" if ef is None else f"eps_f={ef} eps_a={ea}"
        print(f"soak {label}: {res.exchanges_completed}/{res.exchanges_requested} exchanges, "
              f"{'ok' if res.ok else res.message}  {time.perf_counter() - t0:.1f} s")
        failed |= not res.ok
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
