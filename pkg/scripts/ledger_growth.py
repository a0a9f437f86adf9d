"""Constant ledger of the Schnakenberg example as the compartment count grows.

The C chain is a nested recursion; past a handful of compartments it leaves
double precision. Writes one CSV row per n with the step where it overflowed.

    python scripts/ledger_growth.py [--max-n 8] [--csv ledger_growth.csv]
"""
import argparse
import csv

from rdbound.bounds import build_ledger
from rdbound.catalog import build_example
from rdbound.errors import ChainOverflow
from rdbound.llf import verify_llf

FIELDS = ("K", "M_K", "B_K", "F_max", "C", "C_underbar", "B")


def main(max_n: int, path: str):
    ex = build_example("schnakenberg")
    cand = verify_llf(ex.W, ex.reactions)
    rows = []
    for n in range(2, max_n + 1):
        u0 = [ex.u0[i % 2] for i in range(n)]
        v0 = [ex.v0[i % 2] for i in range(n)]
        try:
            led = build_ledger(cand, n, ex.d, ex.gamma, u0, v0)
        except ChainOverflow as exc:
            rows.append({"n": n, "overflow_step": exc.step})
            print(f"n={n}: overflow at step {exc.step}")
            continue
        rows.append({"n": n, "overflow_step": "", **{k: led[k] for k in FIELDS}})
        print(f"n={n}: B = {led['B']:.6g}")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, ["n", "overflow_step", *FIELDS], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-n", type=int, default=8)
    ap.add_argument("--csv", default="ledger_growth.csv")
    a = ap.parse_args()
    main(a.max_n, a.csv)
