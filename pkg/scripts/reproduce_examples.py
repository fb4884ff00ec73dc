#!/usr/bin/env python3
"""Run check and synth on every fixture in problems/ and print a summary.

    python scripts/reproduce_examples.py [--bmc K] [NAME ...]
"""

import argparse
import time
from pathlib import Path

from pvsynth import load_problem
from pvsynth import logic as L
from pvsynth import sysver as S

ROOT = Path(__file__).resolve().parent.parent / "problems"

# fixtures whose synthesis is best read one VC at a time
FOCUS = {"maxarray_open": "init", "heater_pha": "flow:normal"}


def run(name: str, bmc_depth: int) -> None:
    p = load_problem(ROOT / f"{name}.pvs")
    t = time.perf_counter()
    chk = S.check_invariant(p)
    line = f"{name:16s} check={chk.status:8s}"
    if chk.status != S.HOLDS:
        syn = S.synthesize_constraint(p, vc=FOCUS.get(name))
        line += f" synth={syn.status} weakest={'yes' if syn.weakest else 'no'}"
        print(line + f"  ({time.perf_counter() - t:.2f}s)")
        for c in syn.clauses:
            print("    " + L.format_formula(L.universal_closure(L.clause_formula(c))))
        if syn.status == "ok":
            back = S.check_invariant(S.with_assumptions(p, syn.constraint))
            print(f"    re-check with constraint: {back.status}")
    else:
        print(line + f"  ({time.perf_counter() - t:.2f}s)")
    if bmc_depth >= 0 and p.system_kind == "transition":
        t = time.perf_counter()
        r = S.bmc(p, bmc_depth)
        print(f"    bmc {bmc_depth}: {r.status}  ({time.perf_counter() - t:.2f}s)")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*")
    ap.add_argument("--bmc", type=int, default=-1, help="also unroll transition systems to this depth")
    args = ap.parse_args()
    names = args.names or sorted(p.stem for p in ROOT.glob("*.pvs"))
    for n in names:
        run(n, args.bmc)


if __name__ == "__main__":
    main()
